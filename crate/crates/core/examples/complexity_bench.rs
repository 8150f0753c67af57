//! Times the structured and dense inverses over growing grids.

use otfs_detect::sim::{bench, ExperimentConfig};
use otfs_detect::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        paths: vec![14],
        bench_sizes: vec![(32, 8), (64, 16), (128, 32)],
        dense_sizes: vec![(16, 8), (32, 8)],
        bench_reps: 3,
        ..Default::default()
    };
    let report = bench(&cfg)?;
    for r in &report.rows {
        println!("{:5} MN={:6} median {:.3e} s", r.mode.name(), r.mn(), r.median_s);
    }
    println!("log-log slope fast {:?}, dense {:?}", report.fast_slope, report.dense_slope);
    Ok(())
}
