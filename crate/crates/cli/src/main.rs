mod args;
mod commands;
mod error;

use clap::Parser;

use args::{Cli, Command};
use commands::PatternArgs;
use error::{CliError, CliResult};

const THREADS_ENV: &str = "TURNTAKER_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let common = &cli.common;
    match cli.command {
        Command::Simulate { params, turns, meetings, seed } => {
            commands::simulate(common, &params, turns, meetings, seed)
        }
        Command::Fit { data, variant, dataset, fit } => {
            commands::fit_cmd(common, &data, variant.into(), dataset, &fit)
        }
        Command::Evaluate { data, split, fit } => commands::evaluate(common, &data, split, &fit),
        Command::Patterns { data, full, reduced, replications, level, min_exchange, dataset, fit } => {
            commands::patterns(
                common,
                PatternArgs {
                    data: &data,
                    full: full.as_deref(),
                    reduced: reduced.as_deref(),
                    replications,
                    level,
                    min_exchange,
                    dataset,
                    fit: &fit,
                },
            )
        }
        Command::Traits { fits, traits } => commands::traits(common, &fits, &traits),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
