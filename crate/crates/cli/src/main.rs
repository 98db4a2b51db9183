use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weakclock_cli::plan::{guard, plan};
use weakclock_cli::{parse_config, run_experiment, RunConfig, RunError};

#[derive(Parser)]
#[command(name = "weakclock", version, about = "Weak-measurement Ramsey experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a configuration describes.
    Run {
        config: PathBuf,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks one per core.
        #[arg(long, env = "WEAKCLOCK_WORKERS", default_value_t = 0)]
        workers: usize,
        /// Overrides the configuration's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a configuration and check its size guards without running it.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(RunError::Io)?;
    Ok(parse_config(&text)?)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| RunError::Numeric(format!("cannot start workers: {e}")))?;
            let (path, rows) = pool.install(|| run_experiment(&cfg))?;
            eprintln!("wrote {rows} rows to {}", path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let points = plan(&cfg)?;
            guard(&cfg, &points).map_err(RunError::Guard)?;
            println!("ok: {} {} rows", cfg.experiment.as_str(), points.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("weakclock: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
