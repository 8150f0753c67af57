use crate::constellation::Constellation;
use crate::{Error, Result, C64};

/// Bounds applied to every message variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarClamp {
    pub min: f64,
    pub max: f64,
}

impl Default for VarClamp {
    fn default() -> Self {
        Self { min: 1e-12, max: 1e12 }
    }
}

impl VarClamp {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min < self.max) {
            return Err(Error::InvalidParameter(format!("bad variance clamps [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    pub fn apply(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

/// Symbol prior used by the input-side denoiser.
#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    /// Uniform over the points of a constellation.
    Discrete(Constellation),
    /// `CN(0, var)`; turns the detectors into linear estimators.
    Gaussian { var: f64 },
}

impl Prior {
    pub fn mean_energy(&self) -> f64 {
        match self {
            Prior::Discrete(c) => c.mean_energy(),
            Prior::Gaussian { var } => *var,
        }
    }

    pub fn hard_decide(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Prior::Discrete(c) => c.hard_decide(x),
            Prior::Gaussian { .. } => x.to_vec(),
        }
    }
}

/// `E[x | m, v]` and `Var[x | m, v]` for one component observed as
/// `CN(m; x, v)`.
pub fn denoise_component(m: C64, v: f64, prior: &Prior) -> (C64, f64) {
    match prior {
        Prior::Gaussian { var } => {
            let g = var / (var + v);
            (m * g, g * v)
        }
        Prior::Discrete(c) => {
            let pts = c.points();
            // Log-weights with the max subtracted before exponentiation.
            let logw: Vec<f64> = pts.iter().map(|a| -(m - a).norm_sqr() / v).collect();
            let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            let mut mean = C64::new(0.0, 0.0);
            let mut second = 0.0;
            for (a, lw) in pts.iter().zip(&logw) {
                let w = (lw - top).exp();
                z += w;
                mean += a * w;
                second += a.norm_sqr() * w;
            }
            mean /= z;
            ((mean), (second / z - mean.norm_sqr()).max(0.0))
        }
    }
}

/// Componentwise denoising with a scalar input variance; returns the
/// average posterior variance.
pub fn prior_denoiser(m: &[C64], v: f64, prior: &Prior) -> (Vec<C64>, f64) {
    let mut vsum = 0.0;
    let x = m
        .iter()
        .map(|&mi| {
            let (xi, vi) = denoise_component(mi, v, prior);
            vsum += vi;
            xi
        })
        .collect();
    (x, vsum / m.len() as f64)
}

/// Gaussian division `post / cav`.
///
/// A non-positive precision difference yields an uninformative message
/// (`clamp.max`) carrying the posterior mean.
pub fn extrinsic(post_mean: C64, post_var: f64, cav_mean: C64, cav_var: f64, clamp: VarClamp) -> (C64, f64) {
    let prec = 1.0 / post_var - 1.0 / cav_var;
    if !(prec > 0.0) {
        return (post_mean, clamp.max);
    }
    let var = 1.0 / prec;
    let mean = (post_mean / post_var - cav_mean / cav_var) * var;
    (mean, clamp.apply(var))
}

/// `d * new + (1 - d) * old`.
pub fn damp_mean(new: C64, old: C64, d: f64) -> C64 {
    new * d + old * (1.0 - d)
}

/// Damps in the precision domain.
pub fn damp_var(new: f64, old: f64, d: f64) -> f64 {
    1.0 / (d / new + (1.0 - d) / old)
}
