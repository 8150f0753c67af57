//! Standard normal helpers and numerically safe truncated-normal moments.

use libm::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub(crate) fn norm_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Mills ratio `Q(x) / phi(x)` for `x >= 0`.
fn mills(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 8.0 {
        0.5 * erfc(x * FRAC_1_SQRT_2) / norm_pdf(x)
    } else {
        // Laplace continued fraction, converges quickly for large x.
        let mut f = x;
        for k in (1..=60).rev() {
            f = x + k as f64 / f;
        }
        1.0 / f
    }
}

/// `(phi(a)/Z, phi(b)/Z)` with `Z = Phi(b) - Phi(a)`, assuming `0 <= a < b`.
fn upper_ratios(a: f64, b: f64) -> (f64, f64) {
    let rho = if b.is_infinite() { 0.0 } else { (-(b - a) * (b + a) * 0.5).exp() };
    let tail_b = if rho == 0.0 { 0.0 } else { rho * mills(b) };
    let ra = 1.0 / (mills(a) - tail_b);
    (ra, rho * ra)
}

/// Mean and variance of a standard normal truncated to `(a, b]`.
///
/// Never evaluates `Phi(b) - Phi(a)` directly in the tails: when the interval
/// sits on one side of zero the ratios are expressed through Mills ratios, so
/// intervals far out in the tail (where the probability mass underflows) still
/// produce finite moments.
pub(crate) fn truncated_std_normal(a: f64, b: f64) -> (f64, f64) {
    debug_assert!(a < b);
    let (ra, rb) = if a >= 0.0 {
        upper_ratios(a, b)
    } else if b <= 0.0 {
        let (rb, ra) = upper_ratios(-b, -a);
        (ra, rb)
    } else {
        let z = 0.5 * (erf_ext(b * FRAC_1_SQRT_2) - erf_ext(a * FRAC_1_SQRT_2));
        (norm_pdf(a) / z, norm_pdf(b) / z)
    };
    let mean = ra - rb;
    let a_term = if a.is_infinite() { 0.0 } else { a * ra };
    let b_term = if b.is_infinite() { 0.0 } else { b * rb };
    let var = (1.0 + a_term - b_term - mean * mean).clamp(0.0, 1.0);
    (mean, var)
}

fn erf_ext(x: f64) -> f64 {
    if x.is_infinite() {
        x.signum()
    } else {
        erf(x)
    }
}
