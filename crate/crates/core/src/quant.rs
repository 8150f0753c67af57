//! Uniform B-bit quantizer, its interval likelihood and the posterior moments
//! of the pre-quantization sample.
//!
//! The quantizer acts independently on the real and imaginary parts. With
//! step `q_step` and `L = 2^B` levels the output levels are
//! `p_i = (i - L/2 - 1/2) q_step`, `i = 1..=L`, and level `p_i` is emitted for
//! inputs in `(q_i, q_{i+1}]` with `q_1 = -inf`, `q_{L+1} = +inf` and the finite
//! thresholds half a step between neighbouring levels.

use std::fmt;
use std::str::FromStr;

use crate::special::{norm_cdf, truncated_std_normal};
use crate::{Error, Result, C64};

/// Highest finite resolution accepted by [`QuantizerSpec::new`].
pub const MAX_BITS: u32 = 16;

/// Distortion-minimizing uniform step for a unit-variance Gaussian input,
/// indexed by `B - 1`.
///
/// Produced by [`crate::oracles::optimal_gaussian_step`]; the unit tests
/// recompute every entry.
pub const GAUSSIAN_OPTIMAL_STEP: [f64; 8] = [
    1.595_769_121_6,
    0.995_686_666_5,
    0.586_019_432_1,
    0.335_200_612_3,
    0.188_138_785_3,
    0.104_063_007_5,
    0.056_867_670_6,
    0.030_762_387_1,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bits {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bits::Finite(b) => write!(f, "{b}"),
            Bits::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "∞" => Ok(Bits::Infinite),
            _ => s
                .parse::<u32>()
                .map(Bits::Finite)
                .map_err(|_| Error::Config(format!("bad bit depth '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizerSpec {
    bits: Bits,
    step: f64,
    levels: Vec<f64>,
    /// `q_1 ..= q_{L+1}`, including the two infinite ends.
    thresholds: Vec<f64>,
}

impl QuantizerSpec {
    pub fn new(bits: u32, step: f64) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::InvalidParameter(format!("bit depth {bits} outside 1..={MAX_BITS}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("quantizer step {step} must be positive")));
        }
        let n_levels = 1usize << bits;
        let half = (n_levels / 2) as f64;
        let levels = (0..n_levels).map(|i| (i as f64 - half + 0.5) * step).collect();
        let mut thresholds = Vec::with_capacity(n_levels + 1);
        thresholds.push(f64::NEG_INFINITY);
        thresholds.extend((1..n_levels).map(|i| (i as f64 - half) * step));
        thresholds.push(f64::INFINITY);
        Ok(Self { bits: Bits::Finite(bits), step, levels, thresholds })
    }

    /// Infinite-precision ADC: `quantize` is the identity and the output
    /// channel is plain AWGN.
    pub fn infinite() -> Self {
        Self { bits: Bits::Infinite, step: 0.0, levels: Vec::new(), thresholds: Vec::new() }
    }

    /// Builds a spec for `bits`, choosing the step for the given per-real-
    /// dimension input power unless `step_override` is set.
    pub fn for_input_power(bits: Bits, input_power: f64, step_override: Option<f64>) -> Result<Self> {
        match bits {
            Bits::Infinite => Ok(Self::infinite()),
            Bits::Finite(b) => {
                let step = match step_override {
                    Some(s) => s,
                    None => choose_step(b, input_power)?,
                };
                Self::new(b, step)
            }
        }
    }

    pub fn bits(&self) -> Bits {
        self.bits
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_infinite(&self) -> bool {
        self.bits == Bits::Infinite
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Quantizes one real value.
    pub fn quantize_real(&self, x: f64) -> f64 {
        if self.is_infinite() {
            return x;
        }
        let finite = &self.thresholds[1..self.thresholds.len() - 1];
        let idx = finite.partition_point(|&q| q < x);
        self.levels[idx]
    }

    /// Index `i` of the level equal (within 1e-9) to `level`.
    fn level_index(&self, level: f64) -> Result<usize> {
        if self.is_infinite() {
            return Err(Error::UnknownLevel(level));
        }
        let pos = ((level - self.levels[0]) / self.step).round();
        if !(0.0..self.levels.len() as f64).contains(&pos) {
            return Err(Error::UnknownLevel(level));
        }
        let idx = pos as usize;
        if (self.levels[idx] - level).abs() > 1e-9 {
            return Err(Error::UnknownLevel(level));
        }
        Ok(idx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Complex AWGN variance; each real dimension carries half.
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance {sigma2} must be >= 0")));
        }
        Ok(Self { sigma2 })
    }
}

/// Applies the quantizer to real and imaginary parts independently.
pub fn quantize(z: &[C64], spec: &QuantizerSpec) -> Vec<C64> {
    z.iter().map(|v| C64::new(spec.quantize_real(v.re), spec.quantize_real(v.im))).collect()
}

/// The input interval `(lo, hi]` that produces `level`.
pub fn interval_of(level: f64, spec: &QuantizerSpec) -> Result<(f64, f64)> {
    let i = spec.level_index(level)?;
    Ok((spec.thresholds[i], spec.thresholds[i + 1]))
}

/// `P(Q[zbar + w] = p_i)` for every level, `w ~ N(0, sigma2/2)`.
pub fn level_probabilities(zbar: f64, noise: NoiseSpec, spec: &QuantizerSpec) -> Vec<f64> {
    let sd = (noise.sigma2 / 2.0).sqrt();
    spec.thresholds
        .windows(2)
        .map(|w| {
            let cdf = |q: f64| {
                if sd == 0.0 {
                    if q >= zbar { 1.0 } else { 0.0 }
                } else {
                    norm_cdf((q - zbar) / sd)
                }
            };
            cdf(w[1]) - cdf(w[0])
        })
        .collect()
}

fn interval_moments(a: f64, b: f64, mean: f64, prior_var: f64, noise_var: f64) -> (f64, f64) {
    let s2 = prior_var + noise_var;
    let s = s2.sqrt();
    let (tm, tv) = truncated_std_normal((a - mean) / s, (b - mean) / s);
    let gain = prior_var / s;
    let post_mean = mean + gain * tm;
    let post_var = prior_var * noise_var / s2 + gain * gain * tv;
    (post_mean, post_var.min(prior_var))
}

/// Posterior mean and variance of `z` given the quantized observation `y`,
/// a cavity `CN(cav_mean, cav_var)` on `z`, and AWGN before the ADC.
///
/// Infinite-precision specs route to [`awgn_posterior_moments`]. The returned
/// variance is the sum over the real and imaginary dimensions, matching the
/// complex `cav_var` convention.
pub fn output_posterior_moments(
    y: C64,
    cav_mean: C64,
    cav_var: f64,
    noise: NoiseSpec,
    spec: &QuantizerSpec,
) -> Result<(C64, f64)> {
    if spec.is_infinite() {
        return Ok(awgn_posterior_moments(y, cav_mean, cav_var, noise));
    }
    if !(cav_var > 0.0) {
        return Err(Error::InvalidParameter(format!("cavity variance {cav_var} must be > 0")));
    }
    let (ar, br) = interval_of(y.re, spec)?;
    let (ai, bi) = interval_of(y.im, spec)?;
    let half = cav_var / 2.0;
    let nh = noise.sigma2 / 2.0;
    let (mr, vr) = interval_moments(ar, br, cav_mean.re, half, nh);
    let (mi, vi) = interval_moments(ai, bi, cav_mean.im, half, nh);
    Ok((C64::new(mr, mi), vr + vi))
}

/// Gaussian product for an unquantized observation `y = z + w`.
pub fn awgn_posterior_moments(y: C64, cav_mean: C64, cav_var: f64, noise: NoiseSpec) -> (C64, f64) {
    if noise.sigma2 == 0.0 {
        return (y, 0.0);
    }
    let prec = 1.0 / cav_var + 1.0 / noise.sigma2;
    let var = 1.0 / prec;
    (var * (cav_mean / cav_var + y / noise.sigma2), var)
}

/// Uniform step for a `bits`-bit ADC fed with per-real-dimension power
/// `input_power`: the Gaussian-optimal step scaled by the input RMS.
pub fn choose_step(bits: u32, input_power: f64) -> Result<f64> {
    if !(1..=GAUSSIAN_OPTIMAL_STEP.len() as u32).contains(&bits) {
        return Err(Error::InvalidParameter(format!("no step table entry for {bits} bits (supported 1..=8)")));
    }
    if !(input_power > 0.0) {
        return Err(Error::InvalidParameter(format!("input power {input_power} must be > 0")));
    }
    Ok(GAUSSIAN_OPTIMAL_STEP[bits as usize - 1] * input_power.sqrt())
}

/// The output model `y = Q[z + w]` shared by all generalized detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputChannel {
    pub quant: QuantizerSpec,
    pub noise: NoiseSpec,
}

impl OutputChannel {
    pub fn new(quant: QuantizerSpec, noise: NoiseSpec) -> Self {
        Self { quant, noise }
    }

    pub fn posterior_moments(&self, y: C64, cav_mean: C64, cav_var: f64) -> Result<(C64, f64)> {
        output_posterior_moments(y, cav_mean, cav_var, self.noise, &self.quant)
    }
}
