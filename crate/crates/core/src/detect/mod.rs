//! Detectors for `y = Q[H x + w]`.
//!
//! * [`gec_sr_detect`]: generalized expectation consistent signal recovery
//!   with three blocks (output, linear, prior) exchanging Gaussian extrinsic
//!   messages. In [`Mode::Fast`] the linear block inverts
//!   `Psi = H0^H H0 / v1 + I / v0` through [`crate::structured`]; in
//!   [`Mode::Dense`] it inverts the `MN x MN` matrix directly and may carry
//!   per-component variances.
//! * [`gamp_detect`]: scalar-variance sum-product GAMP baseline.
//! * [`lmmse_detect`]: quantization-blind linear baseline.

mod denoise;
mod gamp;
mod gec_sr;
mod lmmse;
mod operator;

pub use denoise::{damp_mean, damp_var, denoise_component, extrinsic, prior_denoiser, Prior, VarClamp};
pub use gamp::gamp_detect;
pub use gec_sr::{gec_sr_detect, MessageState};
pub use lmmse::lmmse_detect;
pub use operator::{DenseOperator, LinearOperator};

use std::time::Duration;

use crate::quant::OutputChannel;
use crate::{Error, Result, C64};

/// How the GEC-SR linear block is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Quasi-banded factorization, `O(l_max^2 MN + l_max^3)` per iteration.
    Fast,
    /// Dense `O((MN)^3)` inversion per iteration.
    Dense,
}

/// Variance bookkeeping of the messages. `Vector` requires [`Mode::Dense`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarianceMode {
    Scalar,
    Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    pub max_iters: usize,
    /// Weight of the new message; 1 disables damping.
    pub damping: f64,
    pub clamp: VarClamp,
    pub mode: Mode,
    pub variance: VarianceMode,
    /// Early stop once `||x_t - x_{t-1}||^2 / ||x_{t-1}||^2` drops below this.
    pub stop_tol: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            damping: 0.7,
            clamp: VarClamp::default(),
            mode: Mode::Fast,
            variance: VarianceMode::Scalar,
            stop_tol: 1e-8,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping {} outside (0, 1]", self.damping)));
        }
        if self.mode == Mode::Fast && self.variance == VarianceMode::Vector {
            return Err(Error::InvalidParameter("vector variances need dense mode".into()));
        }
        self.clamp.validate()
    }
}

/// Wall time spent in each phase of a detection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub setup: Duration,
    pub output: Duration,
    pub linear: Duration,
    pub prior: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.setup + self.output + self.linear + self.prior
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub x_soft: Vec<C64>,
    pub x_hard: Vec<C64>,
    /// NMSE of `x_soft` after every iteration, when the truth was supplied.
    pub per_iter_nmse: Option<Vec<f64>>,
    pub iters_run: usize,
    /// Set by GAMP when it blows up; GEC-SR returns an error instead.
    pub diverged: bool,
    pub times: PhaseTimes,
}

/// Everything a detector sees: the quantized samples, the channel operator
/// and the output model.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a, A: ?Sized> {
    pub y: &'a [C64],
    pub channel: &'a A,
    pub output: &'a OutputChannel,
}

/// `||a - b||^2 / ||b||^2`.
pub(crate) fn nmse(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    num / den
}

pub(crate) fn all_finite(means: &[C64], vars: &[f64]) -> bool {
    means.iter().all(|m| m.re.is_finite() && m.im.is_finite()) && vars.iter().all(|v| v.is_finite())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
