//! Brute-force references for the fast paths.
//!
//! Everything here is deliberately naive: explicit permutation and phase
//! matrices, explicit Kronecker products, numerical quadrature, direct
//! enumeration. The unit tests, the acceptance suite and `otfs-sim validate`
//! compare the production code against these.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::{erf, erfc};

use crate::constellation::Constellation;
use crate::model::{ChannelRealization, DftDirection, OtfsDims};
use crate::quant::{interval_of, QuantizerSpec};
use crate::C64;

/// `H0` accumulated from explicit `Pi^l` and `Delta^k` matrices.
pub fn dense_h0(channel: &ChannelRealization, dims: OtfsDims) -> DMatrix<C64> {
    let n = dims.mn();
    let mut pi = DMatrix::<C64>::zeros(n, n);
    for c in 0..n {
        pi[((c + 1) % n, c)] = C64::new(1.0, 0.0);
    }
    let z = C64::from_polar(1.0, 2.0 * PI / n as f64);
    let mut h0 = DMatrix::<C64>::zeros(n, n);
    for p in &channel.paths {
        let mut shift = DMatrix::<C64>::identity(n, n);
        for _ in 0..p.delay_tap {
            shift = &pi * shift;
        }
        let phase = DMatrix::from_diagonal(&DVector::from_fn(n, |c, _| z.powi((p.doppler_tap * c as i64) as i32)));
        h0 += (shift * phase) * p.gain;
    }
    h0
}

/// Normalized `N`-point DFT matrix (`Forward`) or its adjoint.
pub fn dft_matrix(n: usize, direction: DftDirection) -> DMatrix<C64> {
    let sign = match direction {
        DftDirection::Forward => -1.0,
        DftDirection::Adjoint => 1.0,
    };
    DMatrix::from_fn(n, n, |a, b| C64::from_polar(1.0 / (n as f64).sqrt(), sign * 2.0 * PI * (a * b) as f64 / n as f64))
}

/// Explicit `F_N ⊗ I_M` (or `F_N^H ⊗ I_M`).
pub fn kron_dft_matrix(dims: OtfsDims, direction: DftDirection) -> DMatrix<C64> {
    dft_matrix(dims.n(), direction).kronecker(&DMatrix::<C64>::identity(dims.m(), dims.m()))
}

/// Dense effective channel `H = H0 (F_N^H ⊗ I_M)`.
pub fn dense_effective(channel: &ChannelRealization, dims: OtfsDims) -> DMatrix<C64> {
    dense_h0(channel, dims) * kron_dft_matrix(dims, DftDirection::Adjoint)
}

/// Direct inverse of `H^H H / v1 + I / v0`.
pub fn direct_linear_block_inverse(h: &DMatrix<C64>, v1: f64, v0: f64) -> DMatrix<C64> {
    let n = h.ncols();
    let a = h.adjoint() * h / C64::new(v1, 0.0) + DMatrix::<C64>::identity(n, n) / C64::new(v0, 0.0);
    a.try_inverse().expect("positive definite")
}

/// LMMSE in the "wide" form `H^H (H H^H + sigma2 I)^{-1} y`.
pub fn lmmse_wide_form(h: &DMatrix<C64>, y: &[C64], sigma2: f64) -> Vec<C64> {
    let n = h.nrows();
    let a = h * h.adjoint() + DMatrix::<C64>::identity(n, n) * C64::new(sigma2, 0.0);
    let w = a.try_inverse().expect("positive definite") * DVector::from_column_slice(y);
    (h.adjoint() * w).iter().copied().collect()
}

/// Posterior mean and variance of a discrete uniform prior under the
/// likelihood `CN(m; x, v)`, by enumeration. Each normalized weight is
/// formed as `1 / sum_j exp((d_k - d_j) / v)` so no exponential of an
/// absolute distance is ever taken.
pub fn enumerate_prior_moments(m: C64, v: f64, constellation: &Constellation) -> (C64, f64) {
    let pts = constellation.points();
    let d: Vec<f64> = pts.iter().map(|a| (m - a).norm_sqr()).collect();
    let w: Vec<f64> = d.iter().map(|dk| 1.0 / d.iter().map(|dj| ((dk - dj) / v).exp()).sum::<f64>()).collect();
    let mean: C64 = pts.iter().zip(&w).map(|(a, wi)| a * *wi).sum();
    let var = pts.iter().zip(&w).map(|(a, wi)| (a - mean).norm_sqr() * wi).sum::<f64>();
    (mean, var)
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, err) = gk15(f, a, b);
        if err <= tol.max(1e-15 * k.abs()) || depth == 0 {
            return k;
        }
        let c = 0.5 * (a + b);
        rec(f, a, c, 0.5 * tol, depth - 1) + rec(f, c, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, abs_tol, 48)
}

/// `Phi(u) - Phi(w)` for `u > w`, written to avoid cancellation in either
/// tail.
fn normal_mass(w: f64, u: f64) -> f64 {
    if w > 0.0 {
        0.5 * (erfc(w * FRAC_1_SQRT_2) - erfc(u * FRAC_1_SQRT_2))
    } else if u < 0.0 {
        0.5 * (erfc(-u * FRAC_1_SQRT_2) - erfc(-w * FRAC_1_SQRT_2))
    } else {
        let e = |x: f64| if x.is_infinite() { x.signum() } else { erf(x * FRAC_1_SQRT_2) };
        0.5 * (e(u) - e(w))
    }
}

/// Probability that a real sample with prior `N(mean, prior_var)` plus noise
/// `N(0, sigma2/2)` quantizes to `level`.
pub fn level_evidence(level: f64, mean: f64, prior_var: f64, sigma2: f64, spec: &QuantizerSpec) -> f64 {
    let (a, b) = interval_of(level, spec).expect("valid level");
    let s = (prior_var + sigma2 / 2.0).sqrt();
    normal_mass((a - mean) / s, (b - mean) / s)
}

/// Posterior mean and variance of one real dimension of `z` given the
/// quantized level, by quadrature of `t * N(t; mean, prior_var) * p(level | t)`.
/// `prior_var` is per real dimension; `sigma2` is the complex noise variance.
pub fn quadrature_interval_moments(
    level: f64,
    mean: f64,
    prior_var: f64,
    sigma2: f64,
    spec: &QuantizerSpec,
) -> (f64, f64) {
    let (a, b) = interval_of(level, spec).expect("valid level");
    let sn = (sigma2 / 2.0).sqrt();
    let sd = prior_var.sqrt();
    let lik = |t: f64| {
        if sn == 0.0 {
            if t > a && t <= b { 1.0 } else { 0.0 }
        } else {
            normal_mass((a - t) / sn, (b - t) / sn)
        }
    };
    let density = |t: f64| {
        let u = (t - mean) / sd;
        (-0.5 * u * u).exp() / (sd * (2.0 * PI).sqrt()) * lik(t)
    };
    let lo = mean - 14.0 * sd;
    let hi = mean + 14.0 * sd;
    let mut cuts = vec![lo];
    // The likelihood switches within a few noise deviations of each threshold;
    // bracket that region so no panel straddles an unresolved edge.
    for q in [a, b] {
        for k in [-8.0, -2.0, 0.0, 2.0, 8.0] {
            let c = q + k * sn;
            if c.is_finite() && c > lo && c < hi {
                cuts.push(c);
            }
        }
    }
    cuts.push(hi);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let int = |g: &dyn Fn(f64) -> f64| -> f64 {
        let g = |t: f64| g(t);
        cuts.windows(2).map(|w| integrate(&g, w[0], w[1], 1e-17)).sum()
    };
    let z = int(&|t| density(t));
    let m1 = int(&|t| (t - mean) * density(t)) / z;
    let var = int(&|t| (t - mean - m1).powi(2) * density(t)) / z;
    (mean + m1, var)
}

/// Mean-square error of a `bits`-bit uniform quantizer with step `step` on
/// a unit-variance Gaussian input, in closed form over the cells.
pub fn gaussian_distortion(bits: u32, step: f64) -> f64 {
    let spec = QuantizerSpec::new(bits, step).expect("valid spec");
    let pdf = |x: f64| if x.is_infinite() { 0.0 } else { (-0.5 * x * x).exp() / (2.0 * PI).sqrt() };
    let xpdf = |x: f64| if x.is_infinite() { 0.0 } else { x * pdf(x) };
    spec.levels()
        .iter()
        .zip(spec.thresholds().windows(2))
        .map(|(&p, w)| {
            let (a, b) = (w[0], w[1]);
            let mass = normal_mass(a, b);
            // integral of (p - t)^2 phi(t) over (a, b]
            p * p * mass - 2.0 * p * (pdf(a) - pdf(b)) + mass + xpdf(a) - xpdf(b)
        })
        .sum()
}

/// Golden-section minimizer of [`gaussian_distortion`] over the step.
pub fn optimal_gaussian_step(bits: u32) -> f64 {
    let f = |c: f64| gaussian_distortion(bits, c);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-3, 3.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// How far `a` is from a generalized permutation matrix: exactly one entry
/// with magnitude above `zero_tol` in every row and column, each of unit
/// magnitude. Returns the worst `| |a_ij| - 1 |`, or infinity when the
/// sparsity pattern is wrong.
pub fn generalized_permutation_defect(a: &DMatrix<C64>, zero_tol: f64) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut per_col = vec![0usize; n];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut per_row = 0;
        for j in 0..n {
            let m = a[(i, j)].norm();
            if m > zero_tol {
                per_row += 1;
                per_col[j] += 1;
                worst = worst.max((m - 1.0).abs());
            }
        }
        if per_row != 1 {
            return f64::INFINITY;
        }
    }
    if per_col.iter().any(|&c| c != 1) {
        return f64::INFINITY;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_on_smooth_functions() {
        assert!((integrate(&|x: f64| x.powi(6), 0.0, 1.0, 1e-15) - 1.0 / 7.0).abs() < 1e-15);
        let g = integrate(&|x: f64| (-0.5 * x * x).exp(), -12.0, 12.0, 1e-15);
        assert!((g - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn dft_matrix_is_unitary() {
        let f = dft_matrix(5, DftDirection::Forward);
        let fh = dft_matrix(5, DftDirection::Adjoint);
        assert!((&f * &fh - DMatrix::<C64>::identity(5, 5)).norm() < 1e-14);
        assert!((f.adjoint() - fh).norm() < 1e-15);
    }

    #[test]
    fn one_bit_distortion_known_value() {
        // Optimal 1-bit levels are ±sqrt(2/pi), distortion 1 - 2/pi.
        let c = optimal_gaussian_step(1);
        assert!((c - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-7);
        assert!((gaussian_distortion(1, c) - (1.0 - 2.0 / PI)).abs() < 1e-12);
    }

    #[test]
    fn permutation_defect_examples() {
        let mut p = DMatrix::<C64>::zeros(3, 3);
        p[(0, 2)] = C64::new(0.0, 1.0);
        p[(1, 0)] = C64::new(1.0, 0.0);
        p[(2, 1)] = C64::from_polar(1.0, 0.3);
        assert!(generalized_permutation_defect(&p, 1e-9) < 1e-15);
        p[(2, 2)] = C64::new(0.1, 0.0);
        assert_eq!(generalized_permutation_defect(&p, 1e-9), f64::INFINITY);
        p[(2, 2)] = C64::new(0.0, 0.0);
        p[(1, 0)] = C64::new(2.0, 0.0);
        assert!((generalized_permutation_defect(&p, 1e-9) - 1.0).abs() < 1e-15);
    }
}
