use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lacuna::runner::{self, Command, ExperimentConfig, RunError, RunOptions};

/// Experiments on uncertainty principles with lacunary spectra.
#[derive(Debug, Parser)]
#[command(name = "lacuna", version)]
struct Cli {
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON config with the command's `inputs`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report hypothesis violations in the output instead of failing.
    #[arg(long)]
    allow_hypothesis_violation: bool,
    /// `lo,hi,count`: write x, φ(x), φ̌(x) on a grid.
    #[arg(long, value_name = "LO,HI,COUNT")]
    dump_phi: Option<String>,
    /// `count,spectrum,seed`: JSON lines of random polynomials.
    #[arg(long, value_name = "COUNT,SPECTRUM,SEED")]
    random_poly: Option<String>,
}

fn configure_threads() {
    if let Some(n) = std::env::var("LACUNA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (text, out) = if let Some(spec) = &cli.dump_phi {
        (runner::dump_phi(spec)?, cli.out)
    } else if let Some(spec) = &cli.random_poly {
        (runner::random_polys(spec)?, cli.out)
    } else {
        let command = cli.command.ok_or_else(|| RunError::Config("missing command".into()))?;
        let config = match &cli.config {
            Some(path) => runner::load_config(path)?,
            None => ExperimentConfig {
                command: None,
                seed: None,
                out: None,
                inputs: serde_json::Value::Object(Default::default()),
            },
        };
        let out = cli.out.or_else(|| config.out.clone());
        let options = RunOptions::new(command, config, cli.seed, cli.allow_hypothesis_violation)?;
        (runner::run(&options)?, out)
    };
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    configure_threads();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
