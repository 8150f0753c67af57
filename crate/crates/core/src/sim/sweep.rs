//! Monte Carlo sweeps and per-iteration traces, with CSV, metadata and
//! gnuplot emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, SweepAxis};
use super::trial::{run_trial, TrialRecord};
use crate::quant::Bits;
use crate::{Error, Result};

pub const SWEEP_HEADER: &str = "snr_db,bits,algorithm,P,trials,nmse_db,ser,ber,mean_iters,runtime_ms,failures";
pub const TRACE_HEADER: &str = "iteration,snr_db,bits,algorithm,P,trials,nmse_db,failures";

/// Aggregate of all trials at one `(P, bits, algorithm, snr)` point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub bits: Bits,
    pub algorithm: Algorithm,
    pub paths: usize,
    /// Trials that completed and enter the averages.
    pub trials: usize,
    /// `10 log10` of the trial-averaged NMSE ratio.
    pub nmse_db: f64,
    pub ser: f64,
    pub ber: f64,
    pub mean_iters: f64,
    pub runtime_ms: f64,
    pub failures: usize,
}

/// Trial-averaged per-iteration NMSE of one detector.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub snr_db: f64,
    pub bits: Bits,
    pub algorithm: Algorithm,
    pub paths: usize,
    pub trials: usize,
    pub failures: usize,
    /// `nmse_db[t]` is the value after iteration `t + 1`. Runs that stopped
    /// early hold their last value.
    pub nmse_db: Vec<f64>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// Runs every trial for every path count. Trials are spread over the worker
/// pool; the result is ordered by `(P, trial)` regardless of scheduling.
pub fn run_all_trials(cfg: &ExperimentConfig) -> Result<Vec<Vec<TrialRecord>>> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> =
        cfg.paths.iter().flat_map(|&p| (0..cfg.trials as u64).map(move |t| (p, t))).collect();
    pool(cfg.workers)?.install(|| jobs.par_iter().map(|&(p, t)| run_trial(cfg, p, t)).collect())
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn points(cfg: &ExperimentConfig) -> Vec<(usize, Bits, Algorithm, f64)> {
    let mut v = Vec::new();
    for &p in &cfg.paths {
        for &b in &cfg.bits {
            for &a in &cfg.algorithms {
                for &s in &cfg.snr_db {
                    v.push((p, b, a, s));
                }
            }
        }
    }
    v
}

/// Reduces trial records to one row per `(P, bits, algorithm, snr)`, in
/// trial order so the sums do not depend on scheduling.
pub fn aggregate(cfg: &ExperimentConfig, trials: &[Vec<TrialRecord>]) -> Vec<SweepRow> {
    points(cfg)
        .into_iter()
        .map(|(p, b, a, s)| {
            let recs: Vec<&TrialRecord> = trials
                .iter()
                .flatten()
                .filter(|r| r.paths == p && r.bits == b && r.algorithm == a && r.snr_db == s)
                .collect();
            let ok: Vec<&&TrialRecord> = recs.iter().filter(|r| r.failure.is_none()).collect();
            let k = ok.len() as f64;
            let avg = |f: &dyn Fn(&TrialRecord) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / k };
            SweepRow {
                snr_db: s,
                bits: b,
                algorithm: a,
                paths: p,
                trials: ok.len(),
                nmse_db: to_db(avg(&|r| r.nmse)),
                ser: avg(&|r| r.ser),
                ber: avg(&|r| r.ber),
                mean_iters: avg(&|r| r.iters_run as f64),
                runtime_ms: if cfg.timing { avg(&|r| r.times.total().as_secs_f64() * 1e3) } else { 0.0 },
                failures: recs.len() - ok.len(),
            }
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6},{:.6e},{:.6e},{:.4},{:.4},{}",
            r.snr_db, r.bits, r.algorithm, r.paths, r.trials, r.nmse_db, r.ser, r.ber, r.mean_iters, r.runtime_ms, r.failures
        );
    }
    s
}

/// The full sweep: trials, aggregation and the three output files.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    let trials = run_all_trials(cfg)?;
    let rows = aggregate(cfg, &trials);
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results/sweep.csv"));
    write_outputs(&out, &sweep_csv(&rows), cfg, "sweep", &sweep_plot(&out, cfg))?;
    Ok((rows, out))
}

/// Per-iteration NMSE at `cfg.trace_snr_db` for every iterative detector.
pub fn iteration_trace(cfg: &ExperimentConfig) -> Result<Vec<TraceRow>> {
    let mut c = cfg.clone();
    c.snr_db = vec![cfg.trace_snr_db];
    c.algorithms.retain(|a| a.is_iterative());
    if c.algorithms.is_empty() {
        return Err(Error::Config("iter-trace needs at least one iterative algorithm".into()));
    }
    let trials = run_all_trials(&c)?;
    let mut rows = Vec::new();
    for (p, b, a, s) in points(&c) {
        let recs: Vec<&TrialRecord> = trials
            .iter()
            .flatten()
            .filter(|r| r.paths == p && r.bits == b && r.algorithm == a && r.snr_db == s)
            .collect();
        let ok: Vec<&Vec<f64>> = recs.iter().filter(|r| r.failure.is_none()).filter_map(|r| r.trace.as_ref()).collect();
        let mut sums = vec![0.0; c.max_iters];
        for tr in &ok {
            for (t, acc) in sums.iter_mut().enumerate() {
                *acc += tr.get(t).or(tr.last()).copied().unwrap_or(f64::NAN);
            }
        }
        let nmse_db = sums.iter().map(|v| to_db(v / ok.len() as f64)).collect();
        rows.push(TraceRow { snr_db: s, bits: b, algorithm: a, paths: p, trials: ok.len(), failures: recs.len() - ok.len(), nmse_db });
    }
    Ok(rows)
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        for (t, v) in r.nmse_db.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{},{},{:.6},{}", t + 1, r.snr_db, r.bits, r.algorithm, r.paths, r.trials, v, r.failures);
        }
    }
    s
}

pub fn run_iteration_trace(cfg: &ExperimentConfig) -> Result<(Vec<TraceRow>, PathBuf)> {
    let rows = iteration_trace(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results/iter_trace.csv"));
    write_outputs(&out, &trace_csv(&rows), cfg, "iter-trace", &trace_plot(&out, cfg))?;
    Ok((rows, out))
}

/// `<out>.meta` next to the CSV.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// `<out stem>.gp` next to the CSV.
pub fn plot_path(out: &Path) -> PathBuf {
    out.with_extension("gp")
}

/// Sidecar in `key = value` form: run information first, then the full
/// configuration.
pub fn metadata(cfg: &ExperimentConfig, command: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "code_version = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "master_seed = {}", cfg.seed);
    let _ = writeln!(s, "snr_definition = E|Hx|^2 / sigma^2 with E|Hx|^2 = 1 (unit-energy symbols, path gains CN(0, 1/P))");
    let _ = writeln!(s, "nmse_definition = 10 log10 of the trial mean of ||x_hat - x||^2 / ||x||^2");
    let _ = writeln!(s, "trial_seed = splitmix64(master_seed ^ splitmix64(trial_index)), ChaCha8 stream = P");
    let _ = writeln!(s, "failed_trials = excluded from averages, counted in the failures column");
    let _ = writeln!(s, "quantizer_step = {}", cfg.q_step.map_or("gaussian-optimal for the measured per-dimension input power".into(), |v| v.to_string()));
    for (k, v) in cfg.to_pairs() {
        let _ = writeln!(s, "config.{k} = {v}");
    }
    s
}

fn write_outputs(out: &Path, csv: &str, cfg: &ExperimentConfig, command: &str, plot: &str) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, csv)?;
    std::fs::write(meta_path(out), metadata(cfg, command))?;
    std::fs::write(plot_path(out), plot)?;
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

fn gp_preamble(out: &Path, ylabel: &str, xlabel: &str) -> String {
    let png = file_name(&out.with_extension("png"));
    format!(
        "# gnuplot -c {}\nset datafile separator ','\nset terminal pngcairo size 900,600\nset output '{png}'\nset grid\nset key outside right\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n",
        file_name(&plot_path(out))
    )
}

/// One line per `(P, bits, algorithm)` with SNR on the x axis, or per
/// `(P, snr, algorithm)` with resolution on the x axis (`inf` drawn at 0).
pub fn sweep_plot(out: &Path, cfg: &ExperimentConfig) -> String {
    let csv = file_name(out);
    let mut clauses = Vec::new();
    match cfg.sweep_axis {
        SweepAxis::SnrDb => {
            let mut s = gp_preamble(out, "NMSE (dB)", "SNR (dB)");
            for &p in &cfg.paths {
                for &b in &cfg.bits {
                    for &a in &cfg.algorithms {
                        clauses.push(format!(
                            "'{csv}' every ::1 using 1:((strcol(2) eq '{b}' && strcol(3) eq '{a}' && $4 == {p}) ? $6 : NaN) with linespoints title '{a} B={b} P={p}'"
                        ));
                    }
                }
            }
            s.push_str(&format!("plot {}\n", clauses.join(", \\\n     ")));
            s
        }
        SweepAxis::Bits => {
            let mut s = gp_preamble(out, "NMSE (dB)", "ADC bits (0 = unquantized)");
            for &p in &cfg.paths {
                for &snr in &cfg.snr_db {
                    for &a in &cfg.algorithms {
                        clauses.push(format!(
                            "'{csv}' every ::1 using ((strcol(2) eq 'inf') ? 0 : $2):(($1 == {snr} && strcol(3) eq '{a}' && $4 == {p}) ? $6 : NaN) with linespoints title '{a} SNR={snr} P={p}'"
                        ));
                    }
                }
            }
            s.push_str(&format!("plot {}\n", clauses.join(", \\\n     ")));
            s
        }
    }
}

pub fn trace_plot(out: &Path, cfg: &ExperimentConfig) -> String {
    let csv = file_name(out);
    let mut s = gp_preamble(out, "NMSE (dB)", "iteration");
    let mut clauses = Vec::new();
    for &p in &cfg.paths {
        for &b in &cfg.bits {
            for a in cfg.algorithms.iter().filter(|a| a.is_iterative()) {
                clauses.push(format!(
                    "'{csv}' every ::1 using 1:((strcol(3) eq '{b}' && strcol(4) eq '{a}' && $5 == {p}) ? $7 : NaN) with linespoints title '{a} B={b} P={p}'"
                ));
            }
        }
    }
    s.push_str(&format!("plot {}\n", clauses.join(", \\\n     ")));
    s
}

/// Fixed-width table for the terminal.
pub fn summary_table(rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{:>4} {:>4} {:>13} {:>8} {:>10} {:>10} {:>10} {:>6} {:>5}\n",
        "P", "bits", "algorithm", "snr_db", "nmse_db", "ser", "ber", "iters", "fail"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>4} {:>4} {:>13} {:>8} {:>10.3} {:>10.3e} {:>10.3e} {:>6.2} {:>5}",
            r.paths, r.bits.to_string(), r.algorithm.name(), r.snr_db, r.nmse_db, r.ser, r.ber, r.mean_iters, r.failures
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            m: 8,
            n: 4,
            paths: vec![3],
            l_max: 3,
            k_max: 1,
            trials: 3,
            bits: vec![Bits::Finite(3)],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            algorithms: vec![Algorithm::GecSrFast, Algorithm::Lmmse],
            timing: false,
            ..Default::default()
        }
    }

    #[test]
    fn one_row_per_point() {
        let cfg = small();
        let rows = aggregate(&cfg, &run_all_trials(&cfg).unwrap());
        assert_eq!(rows.len(), 10);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 11);
        assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
    }

    #[test]
    fn aggregation_ignores_worker_count() {
        let mut cfg = small();
        cfg.workers = 1;
        let a = sweep_csv(&aggregate(&cfg, &run_all_trials(&cfg).unwrap()));
        cfg.workers = 3;
        let b = sweep_csv(&aggregate(&cfg, &run_all_trials(&cfg).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn trace_rows_have_max_iters_points() {
        let cfg = small();
        let rows = iteration_trace(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].nmse_db.len(), cfg.max_iters);
        assert_eq!(trace_csv(&rows).lines().count(), cfg.max_iters + 1);
    }

    #[test]
    fn metadata_lists_every_key() {
        let meta = metadata(&small(), "sweep");
        for (k, _) in crate::sim::config::KEYS {
            assert!(meta.contains(&format!("config.{k} = ")), "{k}");
        }
        assert!(meta.contains("master_seed = 1"));
    }

    #[test]
    fn sidecar_paths() {
        let p = Path::new("r/sweep.csv");
        assert_eq!(meta_path(p), PathBuf::from("r/sweep.csv.meta"));
        assert_eq!(plot_path(p), PathBuf::from("r/sweep.gp"));
    }
}
