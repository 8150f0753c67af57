//! One Monte Carlo trial: draw, observe at every `(snr, bits)`, detect with
//! every algorithm on the same observation, score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{Algorithm, ExperimentConfig};
use crate::constellation::Constellation;
use crate::detect::{gamp_detect, gec_sr_detect, lmmse_detect, DetectionResult, Mode, Observation, PhaseTimes, Prior};
use crate::model::{draw_channel, EffectiveChannel, OtfsDims};
use crate::quant::{quantize, Bits, NoiseSpec, OutputChannel, QuantizerSpec};
use crate::{Error, Result, C64};

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index`: `splitmix(master_seed ^ splitmix(trial_index))`.
///
/// The trial RNG is `ChaCha8Rng::seed_from_u64(trial_seed(..))` with its
/// stream set to the path count `P`, so each `(trial, P)` pair draws an
/// independent sequence.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix(master_seed ^ splitmix(trial_index))
}

pub fn trial_rng(master_seed: u64, trial_index: u64, paths: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial_index));
    rng.set_stream(paths as u64);
    rng
}

/// The random part of a trial, shared by every SNR, resolution and detector.
#[derive(Clone, Debug)]
pub struct TrialInstance {
    pub bits: Vec<u8>,
    pub x: Vec<C64>,
    pub channel: EffectiveChannel,
    /// Noise-free channel output `H x`.
    pub z: Vec<C64>,
    /// `CN(0, 1)` noise, scaled per SNR.
    pub w_unit: Vec<C64>,
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws bits, then the channel, then the unit noise, in that order.
pub fn draw_instance<R: Rng + ?Sized>(
    rng: &mut R,
    dims: OtfsDims,
    constellation: &Constellation,
    paths: usize,
    l_max: usize,
    k_max: usize,
) -> Result<TrialInstance> {
    let bits: Vec<u8> = (0..dims.mn() * constellation.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
    let x = constellation.modulate(&bits)?;
    let real = draw_channel(rng, paths, l_max, k_max)?;
    let channel = EffectiveChannel::from_realization(&real, dims)?;
    let z = channel.apply(&x)?;
    let w_unit = (0..dims.mn()).map(|_| complex_normal(rng)).collect();
    Ok(TrialInstance { bits, x, channel, z, w_unit })
}

/// `sigma^2 = 1 / 10^(snr/10)`, since the model output has unit mean power.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl TrialInstance {
    /// Quantized observation at `snr_db` with `bits` of resolution. A `None`
    /// step scales the Gaussian-optimal step to the measured per-real-
    /// dimension power of `z + w`.
    pub fn observe(&self, snr_db: f64, bits: Bits, step: Option<f64>) -> Result<(Vec<C64>, OutputChannel)> {
        let sigma2 = noise_variance(snr_db);
        let sd = sigma2.sqrt();
        let r: Vec<C64> = self.z.iter().zip(&self.w_unit).map(|(z, w)| z + w * sd).collect();
        let power = r.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2 * r.len()) as f64;
        let spec = QuantizerSpec::for_input_power(bits, power, step)?;
        let y = if spec.is_infinite() { r } else { quantize(&r, &spec) };
        Ok((y, OutputChannel::new(spec, NoiseSpec::new(sigma2)?)))
    }
}

/// Runs `alg` on one observation.
pub fn run_detector(
    alg: Algorithm,
    obs: &Observation<'_, EffectiveChannel>,
    prior: &Prior,
    cfg: &ExperimentConfig,
    truth: Option<&[C64]>,
) -> Result<DetectionResult> {
    match alg {
        Algorithm::GecSrFast => gec_sr_detect(obs, prior, &cfg.detector(Mode::Fast), truth),
        Algorithm::GecSrDense => gec_sr_detect(obs, prior, &cfg.detector(Mode::Dense), truth),
        Algorithm::Gamp => gamp_detect(obs, prior, &cfg.detector(Mode::Fast), truth),
        Algorithm::Lmmse => lmmse_detect(obs, prior),
    }
}

/// `||x_hat - x||^2 / ||x||^2`.
pub fn compute_nmse(x_hat: &[C64], x: &[C64]) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x_hat.len() });
    }
    let den: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::InvalidParameter("reference vector has zero norm".into()));
    }
    Ok(x_hat.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / den)
}

/// Fraction of symbols whose nearest constellation point differs from `x`.
pub fn compute_ser(x_hat: &[C64], x: &[C64], c: &Constellation) -> Result<f64> {
    if x_hat.len() != x.len() || x.is_empty() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x_hat.len() });
    }
    let errs = x_hat.iter().zip(x).filter(|(a, b)| c.nearest(**a) != c.nearest(**b)).count();
    Ok(errs as f64 / x.len() as f64)
}

/// Bit error rate of the Gray-demapped hard decisions of `x_hat`.
pub fn compute_ber(x_hat: &[C64], bits: &[u8], c: &Constellation) -> Result<f64> {
    let got = c.hard_demap(x_hat);
    if got.len() != bits.len() || bits.is_empty() {
        return Err(Error::DimensionMismatch { expected: bits.len(), got: got.len() });
    }
    Ok(got.iter().zip(bits).filter(|(a, b)| a != b).count() as f64 / bits.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub snr_db: f64,
    pub bits: Bits,
    pub algorithm: Algorithm,
    pub paths: usize,
    pub nmse: f64,
    pub ser: f64,
    pub ber: f64,
    pub iters_run: usize,
    pub times: PhaseTimes,
    /// Why the detector was abandoned (error or divergence); such trials
    /// are excluded from averages.
    pub failure: Option<String>,
    /// Per-iteration NMSE for iterative detectors.
    pub trace: Option<Vec<f64>>,
}

/// Runs trial `trial_index` for `paths` paths over every SNR, resolution
/// and algorithm of `cfg`, in that nesting order.
pub fn run_trial(cfg: &ExperimentConfig, paths: usize, trial_index: u64) -> Result<Vec<TrialRecord>> {
    let dims = OtfsDims::new(cfg.m, cfg.n)?;
    let seed = trial_seed(cfg.seed, trial_index);
    let mut rng = trial_rng(cfg.seed, trial_index, paths);
    let inst = draw_instance(&mut rng, dims, &cfg.constellation, paths, cfg.l_max, cfg.k_max)?;
    let prior = Prior::Discrete(cfg.constellation.clone());
    let mut out = Vec::with_capacity(cfg.snr_db.len() * cfg.bits.len() * cfg.algorithms.len());
    for &snr_db in &cfg.snr_db {
        for &bits in &cfg.bits {
            let (y, output) = inst.observe(snr_db, bits, cfg.q_step)?;
            let obs = Observation { y: &y, channel: &inst.channel, output: &output };
            for &algorithm in &cfg.algorithms {
                let mut rec = TrialRecord {
                    seed,
                    trial: trial_index,
                    snr_db,
                    bits,
                    algorithm,
                    paths,
                    nmse: f64::NAN,
                    ser: f64::NAN,
                    ber: f64::NAN,
                    iters_run: 0,
                    times: PhaseTimes::default(),
                    failure: None,
                    trace: None,
                };
                match run_detector(algorithm, &obs, &prior, cfg, Some(&inst.x)) {
                    Ok(res) if res.diverged => rec.failure = Some("diverged".into()),
                    Ok(res) => {
                        rec.nmse = compute_nmse(&res.x_soft, &inst.x)?;
                        rec.ser = compute_ser(&res.x_hard, &inst.x, &cfg.constellation)?;
                        rec.ber = compute_ber(&res.x_hard, &inst.bits, &cfg.constellation)?;
                        rec.iters_run = res.iters_run;
                        rec.times = res.times;
                        rec.trace = res.per_iter_nmse;
                    }
                    Err(e) => rec.failure = Some(e.to_string()),
                }
                out.push(rec);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let c = Constellation::qpsk();
        let x = c.modulate(&[0, 0, 1, 1, 0, 1]).unwrap();
        assert_eq!(compute_nmse(&x, &x).unwrap(), 0.0);
        assert_eq!(compute_ser(&x, &x, &c).unwrap(), 0.0);
        let zero = vec![C64::new(0.0, 0.0); 3];
        assert!((compute_nmse(&zero, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<C64> = x.iter().map(|v| -v).collect();
        assert_eq!(compute_ser(&neg, &x, &c).unwrap(), 1.0);
        assert_eq!(compute_ber(&neg, &[0, 0, 1, 1, 0, 1], &c).unwrap(), 1.0);
        assert!(compute_nmse(&x, &zero).is_err());
    }

    #[test]
    fn seeds_differ_per_trial_and_master() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
        assert_eq!(trial_seed(7, 9), trial_seed(7, 9));
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            m: 16,
            n: 4,
            paths: vec![4],
            l_max: 4,
            k_max: 2,
            snr_db: vec![60.0],
            bits: vec![Bits::Infinite],
            algorithms: vec![Algorithm::GecSrFast],
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_trial() {
        let mut cfg = small();
        cfg.algorithms = Algorithm::ALL.to_vec();
        cfg.bits = vec![Bits::Finite(2), Bits::Infinite];
        cfg.snr_db = vec![5.0];
        let strip = |mut v: Vec<TrialRecord>| {
            v.iter_mut().for_each(|r| r.times = PhaseTimes::default());
            v
        };
        assert_eq!(strip(run_trial(&cfg, 4, 3).unwrap()), strip(run_trial(&cfg, 4, 3).unwrap()));
    }

    #[test]
    fn noiseless_limit_has_no_symbol_errors() {
        let cfg = small();
        for t in 0..5 {
            let recs = run_trial(&cfg, 4, t).unwrap();
            assert_eq!(recs.len(), 1);
            assert!(recs[0].failure.is_none());
            assert_eq!(recs[0].ser, 0.0, "trial {t}");
        }
    }

    #[test]
    fn unit_model_power() {
        // E|z|^2 = sum E|h_i|^2 E|x|^2 = 1, so the empirical mean over many
        // trials should be close to 1.
        let dims = OtfsDims::new(16, 4).unwrap();
        let c = Constellation::qpsk();
        let mut acc = 0.0;
        let trials = 400;
        for t in 0..trials {
            let mut rng = trial_rng(5, t, 6);
            let inst = draw_instance(&mut rng, dims, &c, 6, 4, 2).unwrap();
            acc += inst.z.iter().map(|v| v.norm_sqr()).sum::<f64>() / 64.0;
        }
        assert!((acc / trials as f64 - 1.0).abs() < 0.1);
    }
}
