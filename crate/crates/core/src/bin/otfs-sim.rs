//! `otfs-sim sweep | iter-trace | bench | validate`
//!
//! Settings come from the defaults, then `--config <file>`, then any
//! `--<key> <value>` flag (one per configuration key).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use otfs_detect::sim::{self, ExperimentConfig, KEYS};

fn with_keys(cmd: Command) -> Command {
    let cmd = cmd.arg(Arg::new("config").long("config").value_name("PATH").help("key = value configuration file"));
    KEYS.iter().fold(cmd, |c, (key, help)| c.arg(Arg::new(*key).long(*key).value_name("VALUE").help(*help)))
}

fn cli() -> Command {
    Command::new("otfs-sim")
        .about("Monte Carlo harness for quantized OTFS detection")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_keys(Command::new("sweep").about("NMSE/SER/BER over SNR, resolution and detector")))
        .subcommand(with_keys(Command::new("iter-trace").about("NMSE after every iteration at trace_snr_db")))
        .subcommand(with_keys(Command::new("bench").about("wall time of the structured and dense inverses vs MN")))
        .subcommand(with_keys(Command::new("validate").about("compare every fast path with its dense oracle")))
}

fn load(m: &ArgMatches) -> otfs_detect::Result<ExperimentConfig> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(p) => ExperimentConfig::from_file(&PathBuf::from(p))?,
        None => ExperimentConfig::default(),
    };
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn run(sub: &str, m: &ArgMatches) -> otfs_detect::Result<bool> {
    let cfg = load(m)?;
    match sub {
        "sweep" => {
            let (rows, out) = sim::run_sweep(&cfg)?;
            print!("{}", sim::summary_table(&rows));
            println!("wrote {}", out.display());
        }
        "iter-trace" => {
            let (rows, out) = sim::run_iteration_trace(&cfg)?;
            for r in &rows {
                let vals: Vec<String> = r.nmse_db.iter().map(|v| format!("{v:.2}")).collect();
                println!("P={} bits={} {}: {}", r.paths, r.bits, r.algorithm, vals.join(" "));
            }
            println!("wrote {}", out.display());
        }
        "bench" => {
            let (rep, out) = sim::run_bench(&cfg)?;
            for r in &rep.rows {
                println!("{:>5} MN={:>6} median={:.3e} s", r.mode.name(), r.mn(), r.median_s);
            }
            let s = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
            println!("fast slope {}  dense slope {}", s(rep.fast_slope), s(rep.dense_slope));
            println!("wrote {}", out.display());
        }
        "validate" => {
            let rep = sim::run_validate(cfg.seed)?;
            print!("{}", rep.render());
            return Ok(rep.all_passed());
        }
        _ => unreachable!("clap rejects unknown subcommands"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (sub, m) = matches.subcommand().expect("subcommand required");
    match run(sub, m) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
