//! Wall-time scaling of the linear-block inverse: structured versus dense.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::sweep::{meta_path, metadata, plot_path};
use super::trial::trial_rng;
use crate::model::{draw_channel, DelayDopplerChannel, OtfsDims};
use crate::structured::{assemble_gram, assemble_psi, dense_inverse, factorize};
use crate::{Error, Result, C64};

pub const BENCH_HEADER: &str = "mode,m,n,mn,l_max,reps,median_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMode {
    /// Assemble `Psi`, factorize, one solve, trace of the inverse.
    Fast,
    /// Invert the dense `MN x MN` `Psi`.
    Dense,
}

impl BenchMode {
    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Fast => "fast",
            BenchMode::Dense => "dense",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: BenchMode,
    pub m: usize,
    pub n: usize,
    pub median_s: f64,
}

impl BenchRow {
    pub fn mn(&self) -> usize {
        self.m * self.n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub l_max: usize,
    pub reps: usize,
    pub fast_slope: Option<f64>,
    pub dense_slope: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn bench_channel(cfg: &ExperimentConfig, m: usize, n: usize) -> Result<DelayDopplerChannel> {
    let dims = OtfsDims::new(m, n)?;
    if 2 * cfg.l_max >= dims.mn() {
        return Err(Error::Config(format!("bench size {m}x{n} too small for l_max = {}", cfg.l_max)));
    }
    let paths = *cfg.paths.iter().max().unwrap_or(&1);
    let mut rng = trial_rng(cfg.seed, (m * n) as u64, paths);
    let mut real = draw_channel(&mut rng, paths, cfg.l_max, cfg.k_max)?;
    // Pin the widest delay so every size exercises the full band.
    if let Some(last) = real.paths.last_mut().filter(|_| paths > 1) {
        last.delay_tap = cfg.l_max;
    }
    DelayDopplerChannel::new(&real, dims)
}

/// Median wall time of one structured pass (assemble, factorize, solve,
/// trace) for a `m x n` grid.
pub fn time_fast(cfg: &ExperimentConfig, m: usize, n: usize) -> Result<f64> {
    let h0 = bench_channel(cfg, m, n)?;
    let gram = assemble_gram(&h0, cfg.l_max)?;
    let r: Vec<C64> = (0..m * n).map(|i| C64::new((i % 7) as f64 - 3.0, (i % 3) as f64)).collect();
    let mut times = Vec::with_capacity(cfg.bench_reps);
    for _ in 0..cfg.bench_reps {
        let t = Instant::now();
        let psi = assemble_psi(&gram, 0.7, 1.3)?;
        let f = factorize(&psi)?;
        let u = f.solve(&r)?;
        let tr = f.trace_inverse()?;
        std::hint::black_box((u, tr));
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

/// Median wall time of the dense inverse of `Psi` for a `m x n` grid.
pub fn time_dense(cfg: &ExperimentConfig, m: usize, n: usize) -> Result<f64> {
    let h0 = bench_channel(cfg, m, n)?;
    if m * n > cfg.oracle_cap {
        return Err(Error::OracleCap { n: m * n, cap: cfg.oracle_cap });
    }
    let psi = assemble_psi(&assemble_gram(&h0, cfg.l_max)?, 0.7, 1.3)?.to_dense();
    let mut times = Vec::with_capacity(cfg.bench_reps);
    for _ in 0..cfg.bench_reps {
        let t = Instant::now();
        let inv = dense_inverse(&psi)?;
        std::hint::black_box(inv);
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

pub fn bench(cfg: &ExperimentConfig) -> Result<BenchReport> {
    if cfg.bench_reps == 0 {
        return Err(Error::Config("bench_reps must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &(m, n) in &cfg.bench_sizes {
        rows.push(BenchRow { mode: BenchMode::Fast, m, n, median_s: time_fast(cfg, m, n)? });
    }
    for &(m, n) in cfg.dense_sizes.iter().filter(|(m, n)| m * n <= cfg.oracle_cap) {
        rows.push(BenchRow { mode: BenchMode::Dense, m, n, median_s: time_dense(cfg, m, n)? });
    }
    let slope = |mode: BenchMode| {
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.mode == mode).map(|r| (r.mn() as f64, r.median_s)).collect();
        loglog_slope(&pts)
    };
    Ok(BenchReport {
        fast_slope: slope(BenchMode::Fast),
        dense_slope: slope(BenchMode::Dense),
        rows,
        l_max: cfg.l_max,
        reps: cfg.bench_reps,
    })
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{},{},{},{:.6e}", r.mode.name(), r.m, r.n, r.mn(), report.l_max, report.reps, r.median_s);
    }
    s
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or("n/a".into(), |v| format!("{v:.3}"))
}

/// Runs the benchmark and writes the CSV, sidecar (with the fitted slopes)
/// and a log-log gnuplot script.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<(BenchReport, PathBuf)> {
    let report = bench(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results/bench.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&out, bench_csv(&report))?;
    let mut meta = metadata(cfg, "bench");
    let _ = writeln!(meta, "fast_loglog_slope = {}", fmt_slope(report.fast_slope));
    let _ = writeln!(meta, "dense_loglog_slope = {}", fmt_slope(report.dense_slope));
    std::fs::write(meta_path(&out), meta)?;
    let csv = out.file_name().map_or_else(|| out.display().to_string(), |f| f.to_string_lossy().into_owned());
    let png = out.with_extension("png");
    let png = png.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let gp = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{png}'\nset logscale xy\nset grid\nset xlabel 'MN'\nset ylabel 'median time (s)'\n\
         plot '{csv}' every ::1 using 4:(strcol(1) eq 'fast' ? $7 : NaN) with linespoints title 'fast (slope {})', \\\n     \
         '{csv}' every ::1 using 4:(strcol(1) eq 'dense' ? $7 : NaN) with linespoints title 'dense (slope {})'\n",
        fmt_slope(report.fast_slope),
        fmt_slope(report.dense_slope)
    );
    std::fs::write(plot_path(&out), gp)?;
    Ok((report, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(2.5))).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.5).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }

    #[test]
    fn small_bench_runs() {
        let cfg = ExperimentConfig {
            l_max: 3,
            bench_sizes: vec![(8, 4), (16, 4)],
            dense_sizes: vec![(8, 4)],
            bench_reps: 1,
            ..Default::default()
        };
        let rep = bench(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows.iter().all(|r| r.median_s > 0.0));
        assert!(rep.fast_slope.is_some() && rep.dense_slope.is_none());
    }
}
