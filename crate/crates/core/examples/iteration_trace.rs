//! Trial-averaged NMSE per iteration for the iterative detectors.

use otfs_detect::quant::Bits;
use otfs_detect::sim::{iteration_trace, Algorithm, ExperimentConfig};
use otfs_detect::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        paths: vec![14],
        bits: vec![Bits::Finite(3)],
        algorithms: vec![Algorithm::GecSrFast, Algorithm::Gamp],
        trials: 30,
        trace_snr_db: 12.0,
        ..Default::default()
    };
    for row in iteration_trace(&cfg)? {
        let line: Vec<String> = row.nmse_db.iter().map(|v| format!("{v:.1}")).collect();
        println!("{:12} {}", row.algorithm.name(), line.join(" "));
    }
    Ok(())
}
