use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::denoise::{damp_mean, damp_var, denoise_component, extrinsic, Prior};
use super::{all_finite, mean, nmse, DetectionResult, DetectorConfig, Mode, Observation, PhaseTimes, VarianceMode};
use crate::model::{DftDirection, EffectiveChannel};
use crate::structured::{assemble_gram, assemble_psi, dense_inverse, factorize, QuasiBandedMatrix};
use crate::{Error, Result, C64};

/// Gaussian messages exchanged between the three GEC-SR blocks. Index `0`
/// refers to `x`, index `1` to `z = H x`. In scalar mode every variance
/// vector is constant.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    /// prior block -> linear block, on `x`
    pub m0_plus: Vec<C64>,
    pub v0_plus: Vec<f64>,
    /// linear block -> prior block, on `x`
    pub m0_minus: Vec<C64>,
    pub v0_minus: Vec<f64>,
    /// linear block -> output block, on `z`
    pub m1_plus: Vec<C64>,
    pub v1_plus: Vec<f64>,
    /// output block -> linear block, on `z`
    pub m1_minus: Vec<C64>,
    pub v1_minus: Vec<f64>,
}

/// Posterior of the linear block on `x` and on `z = H x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPosterior {
    pub mu_x: Vec<C64>,
    pub var_x: Vec<f64>,
    pub mu_z: Vec<C64>,
    pub var_z: Vec<f64>,
}

/// The Gaussian linear block `N(x; m0, v0) * N(H x; m1, v1)`.
pub enum LinearBlock<'a> {
    Fast { channel: &'a EffectiveChannel, gram: QuasiBandedMatrix },
    Dense { h: DMatrix<C64>, hth: DMatrix<C64> },
}

impl<'a> LinearBlock<'a> {
    pub fn new(channel: &'a EffectiveChannel, mode: Mode) -> Result<Self> {
        match mode {
            Mode::Fast => {
                let l = channel.h0().realization().max_delay();
                let gram = assemble_gram(channel.h0(), l)?;
                Ok(LinearBlock::Fast { channel, gram })
            }
            Mode::Dense => {
                let h = channel.to_dense();
                let hth = h.adjoint() * &h;
                Ok(LinearBlock::Dense { h, hth })
            }
        }
    }

    /// Posterior moments given the cavities `(m1, v1)` on `z` and
    /// `(m0, v0)` on `x`.
    ///
    /// The fast path uses the means of `v1` and `v0`, i.e. the scaled-
    /// identity form `[H^H H / v1 + I / v0]^{-1} = (F_N ⊗ I_M) Psi^{-1}
    /// (F_N^H ⊗ I_M)`.
    pub fn posterior(
        &self,
        m1: &[C64],
        v1: &[f64],
        m0: &[C64],
        v0: &[f64],
        variance: VarianceMode,
    ) -> Result<LinearPosterior> {
        match self {
            LinearBlock::Fast { channel, gram } => {
                let n = m0.len();
                let (v1, v0) = (mean(v1), mean(v0));
                let psi = assemble_psi(gram, v1, v0)?;
                let factors = factorize(&psi)?;
                let back = channel.h0().apply_adjoint(m1)?;
                let prior = channel.dft().apply(m0, DftDirection::Adjoint)?;
                let r: Vec<C64> = back.iter().zip(&prior).map(|(b, p)| b / v1 + p / v0).collect();
                let u = factors.solve(&r)?;
                let mu_x = channel.dft().apply(&u, DftDirection::Forward)?;
                let mu_z = channel.h0().apply(&u)?;
                let tr = factors.trace_inverse()?;
                let var_x = tr / n as f64;
                // tr(Psi^{-1} G) = v1 (n - tr(Psi^{-1}) / v0)
                let var_z = v1 * (1.0 - tr / (v0 * n as f64));
                Ok(LinearPosterior { mu_x, var_x: vec![var_x; n], mu_z, var_z: vec![var_z; n] })
            }
            LinearBlock::Dense { h, hth } => {
                let n = m0.len();
                let a = match variance {
                    VarianceMode::Scalar => {
                        let (s1, s0) = (mean(v1), mean(v0));
                        hth / C64::new(s1, 0.0) + DMatrix::<C64>::identity(n, n) / C64::new(s0, 0.0)
                    }
                    VarianceMode::Vector => {
                        let mut dh = h.clone();
                        for (i, mut row) in dh.row_iter_mut().enumerate() {
                            row /= C64::new(v1[i], 0.0);
                        }
                        let mut a = h.adjoint() * dh;
                        for i in 0..n {
                            a[(i, i)] += 1.0 / v0[i];
                        }
                        a
                    }
                };
                // Hermitian positive definite; LU only if Cholesky breaks down.
                let sigma = match a.clone().cholesky() {
                    Some(c) => c.inverse(),
                    None => dense_inverse(&a)?,
                };
                let w1: Vec<C64> = m1.iter().zip(v1).map(|(m, v)| m / *v).collect();
                let rhs = h.adjoint() * DVector::from_vec(w1)
                    + DVector::from_iterator(n, m0.iter().zip(v0).map(|(m, v)| m / *v));
                let mu = &sigma * rhs;
                let mu_z = (h * &mu).iter().copied().collect();
                let mu_x = mu.iter().copied().collect();
                let (var_x, var_z) = match variance {
                    VarianceMode::Scalar => {
                        let vx = sigma.trace().re / n as f64;
                        let tr_z: C64 = sigma.iter().zip(hth.transpose().iter()).map(|(s, g)| s * g).sum();
                        (vec![vx; n], vec![tr_z.re / n as f64; n])
                    }
                    VarianceMode::Vector => {
                        let hs = h * &sigma;
                        let vz = (0..n)
                            .map(|i| (0..n).map(|j| hs[(i, j)] * h[(i, j)].conj()).sum::<C64>().re)
                            .collect();
                        ((0..n).map(|i| sigma[(i, i)].re).collect(), vz)
                    }
                };
                Ok(LinearPosterior { mu_x, var_x, mu_z, var_z })
            }
        }
    }
}

fn reduce(v: &mut [f64], variance: VarianceMode) {
    if variance == VarianceMode::Scalar {
        let m = mean(v);
        v.iter_mut().for_each(|x| *x = m);
    }
}

/// Runs GEC-SR on `obs` for a symbol prior `prior`.
///
/// Each iteration runs the output, linear and prior blocks once, in that
/// order, damping every extrinsic mean and precision against its previous
/// value. `truth` only feeds the per-iteration NMSE trace.
pub fn gec_sr_detect(
    obs: &Observation<'_, EffectiveChannel>,
    prior: &Prior,
    config: &DetectorConfig,
    truth: Option<&[C64]>,
) -> Result<DetectionResult> {
    config.validate()?;
    let channel = obs.channel;
    let n = channel.dims().mn();
    if obs.y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: obs.y.len() });
    }
    let clamp = config.clamp;
    let d = config.damping;
    let variance = config.variance;
    let mut times = PhaseTimes::default();

    let t0 = Instant::now();
    let block = LinearBlock::new(channel, config.mode)?;
    times.setup = t0.elapsed();

    let zero = C64::new(0.0, 0.0);
    let e_x = prior.mean_energy();
    let e_z = channel.h0().realization().energy() * e_x;
    let mut st = MessageState {
        m0_plus: vec![zero; n],
        v0_plus: vec![clamp.apply(e_x); n],
        m0_minus: vec![zero; n],
        v0_minus: vec![clamp.max; n],
        m1_plus: vec![zero; n],
        v1_plus: vec![clamp.apply(e_z); n],
        m1_minus: vec![zero; n],
        v1_minus: vec![clamp.max; n],
    };
    let mut x_soft = vec![zero; n];
    let mut trace = truth.map(|_| Vec::with_capacity(config.max_iters));
    let mut iters_run = 0;

    let mut post_m = vec![zero; n];
    let mut post_v = vec![0.0; n];
    for it in 0..config.max_iters {
        let first = it == 0;

        // Output block.
        let t = Instant::now();
        for i in 0..n {
            let (m, v) = obs.output.posterior_moments(obs.y[i], st.m1_plus[i], st.v1_plus[i])?;
            post_m[i] = m;
            post_v[i] = v.max(clamp.min);
        }
        reduce(&mut post_v, variance);
        for i in 0..n {
            let (m, v) = extrinsic(post_m[i], post_v[i], st.m1_plus[i], st.v1_plus[i], clamp);
            if first {
                st.m1_minus[i] = m;
                st.v1_minus[i] = v;
            } else {
                st.m1_minus[i] = damp_mean(m, st.m1_minus[i], d);
                st.v1_minus[i] = damp_var(v, st.v1_minus[i], d);
            }
        }
        if !all_finite(&st.m1_minus, &st.v1_minus) {
            return Err(Error::NonFinite { block: "output", iter: it + 1 });
        }
        times.output += t.elapsed();

        // Linear block.
        let t = Instant::now();
        let lp = block.posterior(&st.m1_minus, &st.v1_minus, &st.m0_plus, &st.v0_plus, variance)?;
        for i in 0..n {
            let (m, v) = extrinsic(lp.mu_x[i], lp.var_x[i].max(clamp.min), st.m0_plus[i], st.v0_plus[i], clamp);
            if first {
                st.m0_minus[i] = m;
                st.v0_minus[i] = v;
            } else {
                st.m0_minus[i] = damp_mean(m, st.m0_minus[i], d);
                st.v0_minus[i] = damp_var(v, st.v0_minus[i], d);
            }
            let (m, v) = extrinsic(lp.mu_z[i], lp.var_z[i].max(clamp.min), st.m1_minus[i], st.v1_minus[i], clamp);
            st.m1_plus[i] = damp_mean(m, st.m1_plus[i], d);
            st.v1_plus[i] = damp_var(v, st.v1_plus[i], d);
        }
        if !all_finite(&st.m0_minus, &st.v0_minus) || !all_finite(&st.m1_plus, &st.v1_plus) {
            return Err(Error::NonFinite { block: "linear", iter: it + 1 });
        }
        times.linear += t.elapsed();

        // Prior block.
        let t = Instant::now();
        for i in 0..n {
            let (m, v) = denoise_component(st.m0_minus[i], st.v0_minus[i], prior);
            post_m[i] = m;
            post_v[i] = v.max(clamp.min);
        }
        reduce(&mut post_v, variance);
        for i in 0..n {
            let (m, v) = extrinsic(post_m[i], post_v[i], st.m0_minus[i], st.v0_minus[i], clamp);
            st.m0_plus[i] = damp_mean(m, st.m0_plus[i], d);
            st.v0_plus[i] = damp_var(v, st.v0_plus[i], d);
        }
        if !all_finite(&st.m0_plus, &st.v0_plus) || !all_finite(&post_m, &post_v) {
            return Err(Error::NonFinite { block: "prior", iter: it + 1 });
        }
        times.prior += t.elapsed();

        let change = nmse(&post_m, &x_soft);
        x_soft.copy_from_slice(&post_m);
        iters_run = it + 1;
        if let (Some(tr), Some(x)) = (trace.as_mut(), truth) {
            tr.push(nmse(&x_soft, x));
        }
        if !first && change < config.stop_tol {
            break;
        }
    }

    Ok(DetectionResult {
        x_hard: prior.hard_decide(&x_soft),
        x_soft,
        per_iter_nmse: trace,
        iters_run,
        diverged: false,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Constellation;
    use crate::model::{draw_channel, OtfsDims};
    use crate::oracles;
    use crate::quant::{quantize, NoiseSpec, OutputChannel, QuantizerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn setup(m: usize, n: usize, p: usize, l: usize, seed: u64) -> (EffectiveChannel, Vec<C64>, ChaCha8Rng) {
        let dims = OtfsDims::new(m, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = draw_channel(&mut rng, p, l, 2).unwrap();
        let q = Constellation::qpsk();
        let bits: Vec<u8> = (0..2 * dims.mn()).map(|_| rng.random_range(0..2)).collect();
        (EffectiveChannel::from_realization(&ch, dims).unwrap(), q.modulate(&bits).unwrap(), rng)
    }

    fn cnoise(rng: &mut ChaCha8Rng, n: usize, s2: f64) -> Vec<C64> {
        let sd = (s2 / 2.0).sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re * sd, im * sd)
            })
            .collect()
    }

    #[test]
    fn noiseless_unquantized_recovers_symbols() {
        let (h, x, _) = setup(16, 4, 4, 4, 21);
        let y = h.apply(&x).unwrap();
        let out = OutputChannel::new(QuantizerSpec::infinite(), NoiseSpec::new(1e-12).unwrap());
        let obs = Observation { y: &y, channel: &h, output: &out };
        let prior = Prior::Discrete(Constellation::qpsk());
        let res = gec_sr_detect(&obs, &prior, &DetectorConfig::default(), Some(&x)).unwrap();
        assert_eq!(res.x_hard, x);
        assert_eq!(res.per_iter_nmse.as_ref().unwrap().len(), res.iters_run);
    }

    #[test]
    fn linear_block_fast_equals_dense() {
        let (h, x, mut rng) = setup(8, 4, 5, 3, 4);
        let n = 32;
        let m1 = h.apply(&x).unwrap().iter().zip(cnoise(&mut rng, n, 0.3)).map(|(a, b)| a + b).collect::<Vec<_>>();
        let m0 = cnoise(&mut rng, n, 1.0);
        let (v1, v0) = (vec![0.4; n], vec![0.8; n]);
        let fast = LinearBlock::new(&h, Mode::Fast).unwrap().posterior(&m1, &v1, &m0, &v0, VarianceMode::Scalar).unwrap();
        let dense = LinearBlock::new(&h, Mode::Dense).unwrap().posterior(&m1, &v1, &m0, &v0, VarianceMode::Scalar).unwrap();
        let rel = |a: &[C64], b: &[C64]| nmse(a, b).sqrt();
        assert!(rel(&fast.mu_x, &dense.mu_x) < 1e-9);
        assert!(rel(&fast.mu_z, &dense.mu_z) < 1e-9);
        assert!((fast.var_x[0] - dense.var_x[0]).abs() / dense.var_x[0] < 1e-9);
        assert!((fast.var_z[0] - dense.var_z[0]).abs() / dense.var_z[0] < 1e-9);
    }

    #[test]
    fn kronecker_identity() {
        let (h, _, _) = setup(8, 4, 4, 3, 9);
        let (v1, v0) = (0.25, 1.7);
        let direct = oracles::direct_linear_block_inverse(&h.to_dense(), v1, v0);
        let g = assemble_gram(h.h0(), 3).unwrap();
        let psi_inv = dense_inverse(&assemble_psi(&g, v1, v0).unwrap().to_dense()).unwrap();
        let f = oracles::kron_dft_matrix(h.dims(), DftDirection::Forward);
        let via = &f * psi_inv * f.adjoint();
        assert!((via - &direct).norm() / direct.norm() < 1e-9);
    }

    #[test]
    fn fast_and_dense_scalar_detections_agree() {
        let (h, x, mut rng) = setup(8, 4, 4, 3, 17);
        let s2 = 0.05;
        let pre: Vec<C64> = h.apply(&x).unwrap().iter().zip(cnoise(&mut rng, 32, s2)).map(|(a, b)| a + b).collect();
        let q = QuantizerSpec::new(3, crate::quant::choose_step(3, 0.5).unwrap()).unwrap();
        let y = quantize(&pre, &q);
        let out = OutputChannel::new(q, NoiseSpec::new(s2).unwrap());
        let obs = Observation { y: &y, channel: &h, output: &out };
        let prior = Prior::Discrete(Constellation::qpsk());
        let cfg = DetectorConfig::default();
        let fast = gec_sr_detect(&obs, &prior, &cfg, None).unwrap();
        let dense = gec_sr_detect(&obs, &prior, &DetectorConfig { mode: Mode::Dense, ..cfg.clone() }, None).unwrap();
        assert!(nmse(&fast.x_soft, &dense.x_soft) < 1e-12);
        let vec = gec_sr_detect(
            &obs,
            &prior,
            &DetectorConfig { mode: Mode::Dense, variance: VarianceMode::Vector, ..cfg.clone() },
            Some(&x),
        )
        .unwrap();
        assert!(vec.per_iter_nmse.unwrap().iter().all(|v| v.is_finite()));
        let again = gec_sr_detect(&obs, &prior, &cfg, None).unwrap();
        assert_eq!(again.x_soft, fast.x_soft);
    }

    #[test]
    fn rejects_bad_config() {
        let (h, x, _) = setup(8, 4, 2, 2, 1);
        let y = h.apply(&x).unwrap();
        let out = OutputChannel::new(QuantizerSpec::infinite(), NoiseSpec::new(0.1).unwrap());
        let obs = Observation { y: &y, channel: &h, output: &out };
        let prior = Prior::Discrete(Constellation::qpsk());
        for cfg in [
            DetectorConfig { max_iters: 0, ..Default::default() },
            DetectorConfig { damping: 0.0, ..Default::default() },
            DetectorConfig { variance: VarianceMode::Vector, ..Default::default() },
        ] {
            assert!(gec_sr_detect(&obs, &prior, &cfg, None).is_err());
        }
        let short = Observation { y: &y[..5], channel: &h, output: &out };
        assert!(gec_sr_detect(&short, &prior, &DetectorConfig::default(), None).is_err());
    }
}
