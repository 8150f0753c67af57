//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key in [`KEYS`] can also be set from the command
//! line under the same name.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::constellation::Constellation;
use crate::detect::{DetectorConfig, Mode, VarClamp, VarianceMode};
use crate::quant::Bits;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    GecSrFast,
    GecSrDense,
    Gamp,
    Lmmse,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::GecSrFast, Algorithm::GecSrDense, Algorithm::Gamp, Algorithm::Lmmse];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GecSrFast => "gec_sr_fast",
            Algorithm::GecSrDense => "gec_sr_dense",
            Algorithm::Gamp => "gamp",
            Algorithm::Lmmse => "lmmse",
        }
    }

    /// Whether the detector produces a per-iteration trace.
    pub fn is_iterative(self) -> bool {
        self != Algorithm::Lmmse
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Which variable the generated plot script puts on the x axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    SnrDb,
    Bits,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Bits => "bits",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_db" => Ok(SweepAxis::SnrDb),
            "bits" => Ok(SweepAxis::Bits),
            other => Err(Error::Config(format!("sweep_axis must be snr_db or bits, got `{other}`"))),
        }
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("m", "delay bins M"),
    ("n", "Doppler bins N"),
    ("paths", "list of path counts P"),
    ("l_max", "maximum delay tap"),
    ("k_max", "maximum Doppler tap"),
    ("constellation", "qpsk or 16qam"),
    ("bits", "list of ADC resolutions, integers or inf"),
    ("snr_db", "list of SNR points in dB"),
    ("algorithms", "subset of gec_sr_fast, gec_sr_dense, gamp, lmmse"),
    ("trials", "Monte Carlo trials per point"),
    ("seed", "master seed"),
    ("max_iters", "detector iteration cap"),
    ("damping", "weight of the new message, in (0, 1]"),
    ("stop_tol", "relative change that stops GEC-SR early"),
    ("v_min", "lower variance clamp"),
    ("v_max", "upper variance clamp"),
    ("q_step", "fixed quantizer step, or auto"),
    ("trace_snr_db", "SNR of iter-trace runs"),
    ("sweep_axis", "x axis of the plot script: snr_db or bits"),
    ("bench_sizes", "MxN grid sizes timed in fast mode"),
    ("dense_sizes", "MxN grid sizes timed in dense mode"),
    ("bench_reps", "repetitions per benchmark size"),
    ("oracle_cap", "largest MN the dense reference will invert"),
    ("out", "output CSV path"),
    ("workers", "worker threads, 0 for all cores"),
    ("timing", "record wall time; false writes 0 so reruns are byte-identical"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub paths: Vec<usize>,
    pub l_max: usize,
    pub k_max: usize,
    pub constellation: Constellation,
    pub bits: Vec<Bits>,
    pub snr_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub damping: f64,
    pub stop_tol: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// `None` picks the Gaussian-optimal step for the measured input power.
    pub q_step: Option<f64>,
    pub trace_snr_db: f64,
    pub sweep_axis: SweepAxis,
    pub bench_sizes: Vec<(usize, usize)>,
    pub dense_sizes: Vec<(usize, usize)>,
    pub bench_reps: usize,
    pub oracle_cap: usize,
    /// `None` lets each subcommand pick its default file name.
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 32,
            n: 8,
            paths: vec![6],
            l_max: 14,
            k_max: 6,
            constellation: Constellation::qpsk(),
            bits: vec![Bits::Finite(3), Bits::Infinite],
            snr_db: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            algorithms: vec![Algorithm::GecSrFast, Algorithm::Gamp, Algorithm::Lmmse],
            trials: 100,
            seed: 1,
            max_iters: 20,
            damping: 0.7,
            stop_tol: 1e-8,
            v_min: 1e-12,
            v_max: 1e12,
            q_step: None,
            trace_snr_db: 12.0,
            sweep_axis: SweepAxis::SnrDb,
            bench_sizes: vec![(32, 8), (64, 16), (128, 32), (256, 64)],
            dense_sizes: vec![(32, 8), (64, 16)],
            bench_reps: 5,
            oracle_cap: crate::structured::DEFAULT_ORACLE_CAP,
            out: None,
            workers: 0,
            timing: true,
        }
    }
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse `{s}`"))))
        .collect()
}

fn one<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse `{}`", v.trim())))
}

fn sizes(v: &str, key: &str) -> Result<Vec<(usize, usize)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s.split_once('x').ok_or_else(|| Error::Config(format!("{key}: expected MxN, got `{s}`")))?;
            Ok((one(a, key)?, one(b, key)?))
        })
        .collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "m" => self.m = one(v, key)?,
            "n" => self.n = one(v, key)?,
            "paths" => self.paths = list(v, key)?,
            "l_max" => self.l_max = one(v, key)?,
            "k_max" => self.k_max = one(v, key)?,
            "constellation" => self.constellation = one(v, key)?,
            "bits" => self.bits = list(v, key)?,
            "snr_db" => self.snr_db = list(v, key)?,
            "algorithms" => self.algorithms = list(v, key)?,
            "trials" => self.trials = one(v, key)?,
            "seed" => self.seed = one(v, key)?,
            "max_iters" => self.max_iters = one(v, key)?,
            "damping" => self.damping = one(v, key)?,
            "stop_tol" => self.stop_tol = one(v, key)?,
            "v_min" => self.v_min = one(v, key)?,
            "v_max" => self.v_max = one(v, key)?,
            "q_step" => self.q_step = if v == "auto" { None } else { Some(one(v, key)?) },
            "trace_snr_db" => self.trace_snr_db = one(v, key)?,
            "sweep_axis" => self.sweep_axis = one(v, key)?,
            "bench_sizes" => self.bench_sizes = sizes(v, key)?,
            "dense_sizes" => self.dense_sizes = sizes(v, key)?,
            "bench_reps" => self.bench_reps = one(v, key)?,
            "oracle_cap" => self.oracle_cap = one(v, key)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "workers" => self.workers = one(v, key)?,
            "timing" => self.timing = one(v, key)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// The configuration as `(key, value)` pairs in [`KEYS`] order; feeding
    /// them back through [`ExperimentConfig::set`] reproduces `self`.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let sz = |v: &[(usize, usize)]| v.iter().map(|(m, n)| format!("{m}x{n}")).collect::<Vec<_>>().join(",");
        vec![
            ("m", self.m.to_string()),
            ("n", self.n.to_string()),
            ("paths", join(&self.paths)),
            ("l_max", self.l_max.to_string()),
            ("k_max", self.k_max.to_string()),
            ("constellation", self.constellation.to_string()),
            ("bits", join(&self.bits)),
            ("snr_db", join(&self.snr_db)),
            ("algorithms", join(&self.algorithms)),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("damping", self.damping.to_string()),
            ("stop_tol", self.stop_tol.to_string()),
            ("v_min", self.v_min.to_string()),
            ("v_max", self.v_max.to_string()),
            ("q_step", self.q_step.map_or("auto".into(), |s| s.to_string())),
            ("trace_snr_db", self.trace_snr_db.to_string()),
            ("sweep_axis", self.sweep_axis.to_string()),
            ("bench_sizes", sz(&self.bench_sizes)),
            ("dense_sizes", sz(&self.dense_sizes)),
            ("bench_reps", self.bench_reps.to_string()),
            ("oracle_cap", self.oracle_cap.to_string()),
            ("out", self.out.as_ref().map_or(String::new(), |p| p.display().to_string())),
            ("workers", self.workers.to_string()),
            ("timing", self.timing.to_string()),
        ]
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("grid {}x{} is empty", self.m, self.n));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.snr_db.is_empty() || self.bits.is_empty() || self.algorithms.is_empty() || self.paths.is_empty() {
            return bad("snr_db, bits, algorithms and paths must be nonempty".into());
        }
        if self.paths.contains(&0) {
            return bad("every path count must be >= 1".into());
        }
        if 2 * self.l_max >= self.mn() {
            return bad(format!("l_max = {} must be < MN/2 = {}", self.l_max, self.mn() / 2));
        }
        if self.algorithms.contains(&Algorithm::GecSrDense) && self.mn() > self.oracle_cap {
            return bad(format!("gec_sr_dense needs MN = {} <= oracle_cap = {}", self.mn(), self.oracle_cap));
        }
        if let Some(s) = self.q_step {
            if !(s > 0.0) {
                return bad(format!("q_step {s} must be > 0"));
            }
        }
        if self.bench_reps == 0 {
            return bad("bench_reps must be >= 1".into());
        }
        self.detector(Mode::Fast).validate()
    }

    pub fn detector(&self, mode: Mode) -> DetectorConfig {
        DetectorConfig {
            max_iters: self.max_iters,
            damping: self.damping,
            clamp: VarClamp { min: self.v_min, max: self.v_max },
            mode,
            variance: VarianceMode::Scalar,
            stop_tol: self.stop_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_pairs() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("# comment\nbits = 1, 3, inf\nsnr_db = -2.5,10\nalgorithms = gamp,lmmse\nq_step = 0.4\nout = a/b.csv\n")
            .unwrap();
        assert_eq!(cfg.bits, vec![Bits::Finite(1), Bits::Finite(3), Bits::Infinite]);
        assert_eq!(cfg.q_step, Some(0.4));
        let mut back = ExperimentConfig::default();
        for (k, v) in cfg.to_pairs() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = ExperimentConfig::default();
        let mut other = ExperimentConfig::default();
        for (k, v) in cfg.to_pairs() {
            if k == "out" {
                continue;
            }
            other.set(k, &v).unwrap();
        }
        assert_eq!(KEYS.len(), cfg.to_pairs().len());
        for ((a, _), (b, _)) in KEYS.iter().zip(cfg.to_pairs()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.apply_text("trials 3").is_err());
        assert!(cfg.set("algorithms", "gec").is_err());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { l_max: 128, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
