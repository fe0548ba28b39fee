//! `plab <command> --config <file> [--out <dir>] [--workers N] [--seed S]`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use plab_cli::{run_job, Command, JobConfig};

#[derive(Debug, Parser)]
#[command(name = "plab", version, about = "Function-space norm and characterization harness")]
struct Args {
    /// One of norm, equiv, axioms, witness, wavelet, decompose, report.
    command: String,
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// Battery seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: Args) -> plab_cli::Result<bool> {
    let mut cfg = JobConfig::load(&args.config)?;
    let cmd: Command = serde_json::from_value(serde_json::Value::String(args.command.clone()))
        .map_err(|_| plab_cli::CliError::Config(format!("unknown command {:?}", args.command)))?;
    if cmd != cfg.command {
        return Err(plab_cli::CliError::Config(format!(
            "command {:?} does not match the config's {:?}",
            cmd.name(),
            cfg.command.name()
        )));
    }
    cfg.out = args.out.or(cfg.out);
    cfg.workers = args.workers.or(cfg.workers);
    cfg.seed = args.seed.or(cfg.seed);
    let rec = run_job(&cfg)?;
    for f in &rec.failures {
        eprintln!("FAILED: {f}");
    }
    println!("{} {} {}", rec.command.name(), rec.config_hash, if rec.passed { "passed" } else { "failed" });
    Ok(rec.passed)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
