//! Small Monte Carlo SNR sweep written to CSV with sidecars.

use otfs_detect::quant::Bits;
use otfs_detect::sim::{run_sweep, summary_table, ExperimentConfig};
use otfs_detect::Result;

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("otfs_example_sweep.csv");
    let cfg = ExperimentConfig {
        trials: 20,
        bits: vec![Bits::Finite(2), Bits::Finite(3), Bits::Infinite],
        snr_db: vec![0.0, 6.0, 12.0, 18.0],
        out: Some(out),
        ..Default::default()
    };
    let (rows, path) = run_sweep(&cfg)?;
    print!("{}", summary_table(&rows));
    println!("wrote {}", path.display());
    Ok(())
}
