//! Scalar-variance sum-product GAMP.
//!
//! With `a2 = ||A||_F^2 / rows` and `c2 = ||A||_F^2 / cols` standing in for
//! every row and column energy, one iteration is
//!
//! ```text
//! vp = a2 vx
//! p  = A x - vp s
//! (zh_i, vz_i) = E/Var[z_i | y_i; p_i, vp]          output denoiser
//! s  = (zh - p) / vp,   vs = (1 - mean(vz) / vp) / vp
//! vr = 1 / (c2 vs)
//! r  = x + vr A^H s
//! (x_i, vx_i) = E/Var[x_i | r_i, vr]                 prior denoiser
//! ```
//!
//! with `s`, `vs`, `x`, `vx` damped against their previous values. The
//! `- vp s` term is the Onsager correction.

use std::time::Instant;

use super::denoise::{damp_mean, damp_var, prior_denoiser, Prior};
use super::{mean, nmse, DetectionResult, DetectorConfig, LinearOperator, Observation, PhaseTimes};
use crate::{Error, Result, C64};

/// NMSE above which a run is flagged as diverged.
pub const DIVERGENCE_NMSE: f64 = 1e3;

pub fn gamp_detect<A: LinearOperator + ?Sized>(
    obs: &Observation<'_, A>,
    prior: &Prior,
    config: &DetectorConfig,
    truth: Option<&[C64]>,
) -> Result<DetectionResult> {
    config.clamp.validate()?;
    let a = obs.channel;
    let (rows, cols) = (a.nrows(), a.ncols());
    if obs.y.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: obs.y.len() });
    }
    let clamp = config.clamp;
    let d = config.damping;
    let mut times = PhaseTimes::default();

    let t0 = Instant::now();
    let fro = a.frobenius_norm_sq();
    let a2 = fro / rows as f64;
    let c2 = fro / cols as f64;
    times.setup = t0.elapsed();

    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; cols];
    let mut vx = prior.mean_energy();
    let mut s = vec![zero; rows];
    let mut vs: Option<f64> = None;
    let mut trace = truth.map(|_| Vec::with_capacity(config.max_iters));
    let mut diverged = false;
    let mut iters_run = 0;

    for it in 0..config.max_iters {
        let t = Instant::now();
        let vp = clamp.apply(a2 * vx);
        let ax = a.apply(&x)?;
        let p: Vec<C64> = ax.iter().zip(&s).map(|(z, si)| z - si * vp).collect();
        let mut s_new = vec![zero; rows];
        let mut vz = vec![0.0; rows];
        for i in 0..rows {
            let (zh, v) = obs.output.posterior_moments(obs.y[i], p[i], vp)?;
            s_new[i] = (zh - p[i]) / vp;
            vz[i] = v;
        }
        let vs_new = clamp.apply((1.0 - mean(&vz) / vp) / vp);
        match vs {
            None => {
                s = s_new;
                vs = Some(vs_new);
            }
            Some(old) => {
                s.iter_mut().zip(&s_new).for_each(|(o, n)| *o = damp_mean(*n, *o, d));
                // vs is a precision-like quantity; damp it linearly.
                vs = Some(d * vs_new + (1.0 - d) * old);
            }
        }
        times.output += t.elapsed();

        let t = Instant::now();
        let vr = clamp.apply(1.0 / (c2 * vs.unwrap()));
        let back = a.apply_adjoint(&s)?;
        let r: Vec<C64> = x.iter().zip(&back).map(|(xi, b)| xi + b * vr).collect();
        times.linear += t.elapsed();

        let t = Instant::now();
        let (x_new, vx_new) = prior_denoiser(&r, vr, prior);
        let finite = x_new.iter().all(|v| v.re.is_finite() && v.im.is_finite()) && vx_new.is_finite();
        if !finite {
            diverged = true;
            times.prior += t.elapsed();
            break;
        }
        x.iter_mut().zip(&x_new).for_each(|(o, n)| *o = damp_mean(*n, *o, d));
        vx = clamp.apply(damp_var(vx_new.max(clamp.min), vx, d));
        times.prior += t.elapsed();
        iters_run = it + 1;

        if let (Some(tr), Some(xt)) = (trace.as_mut(), truth) {
            let e = nmse(&x, xt);
            tr.push(e);
            if !(e <= DIVERGENCE_NMSE) {
                diverged = true;
            }
        }
    }

    Ok(DetectionResult { x_hard: prior.hard_decide(&x), x_soft: x, per_iter_nmse: trace, iters_run, diverged, times })
}

#[cfg(test)]
mod tests {
    use super::super::{lmmse_detect, DenseOperator};
    use super::*;
    use crate::constellation::Constellation;
    use crate::quant::{NoiseSpec, OutputChannel, QuantizerSpec};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cn(rng: &mut ChaCha8Rng, var: f64) -> C64 {
        let sd = (var / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * sd, im * sd)
    }

    #[test]
    fn zero_iterations_return_prior_mean() {
        let a = DenseOperator(DMatrix::identity(4, 4));
        let y = vec![C64::new(1.0, 1.0); 4];
        let out = OutputChannel::new(QuantizerSpec::infinite(), NoiseSpec::new(0.1).unwrap());
        let obs = Observation { y: &y, channel: &a, output: &out };
        let cfg = DetectorConfig { max_iters: 0, ..Default::default() };
        let res = gamp_detect(&obs, &Prior::Discrete(Constellation::qpsk()), &cfg, None).unwrap();
        assert!(res.x_soft.iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert_eq!(res.iters_run, 0);
    }

    #[test]
    fn gaussian_prior_on_iid_matrix_reaches_lmmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (rows, cols) = (256, 128);
        let trials = 10;
        let snr_db = 10.0;
        let (mut e_gamp, mut e_lmmse, mut energy) = (0.0, 0.0, 0.0);
        for _ in 0..trials {
            let h = DMatrix::from_fn(rows, cols, |_, _| cn(&mut rng, 1.0 / cols as f64));
            let a = DenseOperator(h);
            let x: Vec<C64> = (0..cols).map(|_| cn(&mut rng, 1.0)).collect();
            let s2 = 10f64.powf(-snr_db / 10.0);
            let y: Vec<C64> = a.apply(&x).unwrap().iter().map(|z| z + cn(&mut rng, s2)).collect();
            let out = OutputChannel::new(QuantizerSpec::infinite(), NoiseSpec::new(s2).unwrap());
            let obs = Observation { y: &y, channel: &a, output: &out };
            let prior = Prior::Gaussian { var: 1.0 };
            let cfg = DetectorConfig { max_iters: 50, ..Default::default() };
            let g = gamp_detect(&obs, &prior, &cfg, Some(&x)).unwrap();
            let l = lmmse_detect(&obs, &prior).unwrap();
            let err = |v: &[C64]| v.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            e_gamp += err(&g.x_soft);
            e_lmmse += err(&l.x_soft);
            energy += x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let db = |e: f64| 10.0 * (e / energy).log10();
        assert!((db(e_gamp) - db(e_lmmse)).abs() < 1.0, "gamp {} dB vs lmmse {} dB", db(e_gamp), db(e_lmmse));
    }
}
