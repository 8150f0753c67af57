//! Quantization-blind linear MMSE: treats `y` as `H x + w` and returns
//! `(H^H H + (sigma^2 / Es) I)^{-1} H^H y`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::denoise::Prior;
use super::{DetectionResult, LinearOperator, Observation, PhaseTimes};
use crate::{Error, Result, C64};

pub fn lmmse_detect<A: LinearOperator + ?Sized>(obs: &Observation<'_, A>, prior: &Prior) -> Result<DetectionResult> {
    let a = obs.channel;
    if obs.y.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: obs.y.len() });
    }
    let t0 = Instant::now();
    let h = a.to_dense();
    let n = h.ncols();
    let ratio = obs.output.noise.sigma2 / prior.mean_energy();
    let gram = h.adjoint() * &h + DMatrix::<C64>::identity(n, n) * C64::new(ratio, 0.0);
    let rhs = h.adjoint() * DVector::from_column_slice(obs.y);
    let x: Vec<C64> = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs).iter().copied().collect(),
        // Singular H^H H with zero noise: fall back to LU.
        None => gram.lu().solve(&rhs).ok_or(Error::Singular)?.iter().copied().collect(),
    };
    let times = PhaseTimes { linear: t0.elapsed(), ..Default::default() };
    Ok(DetectionResult { x_hard: prior.hard_decide(&x), x_soft: x, per_iter_nmse: None, iters_run: 1, diverged: false, times })
}
