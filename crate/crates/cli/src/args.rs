use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use turntaker::fitter::ModelVariant;
use turntaker::patterns::{DEFAULT_LEVEL, DEFAULT_MIN_EXCHANGE};
use turntaker::simulator::DEFAULT_REPLICATIONS;

#[derive(Debug, Parser)]
#[command(name = "turntaker", version, about = "Simulate, fit and validate memory-weighted turn-taking models")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Full,
    Reduced,
    Tied,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => ModelVariant::Full,
            VariantArg::Reduced => ModelVariant::Reduced,
            VariantArg::Tied => ModelVariant::Tied,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Result encoding. `simulate` always writes annotation rows.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Field delimiter of annotation and trait files.
    #[arg(long, global = true, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// TOML file with fit options (restarts, tolerance, max_iterations, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Overrides the restart seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate conversations from a parameter file.
    Simulate {
        /// Team parameters: `{members, pi, d}`, `{roster, params}` or a saved fit.
        #[arg(long)]
        params: PathBuf,
        /// Turns per meeting.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        turns: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        meetings: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximum-likelihood fit of one team's annotated meetings.
    Fit {
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Full)]
        variant: VariantArg,
        /// Dataset label stored with the fit; defaults to the file stem.
        #[arg(long)]
        dataset: Option<String>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Held-out comparison of the models with and without memory.
    Evaluate {
        /// One annotation file per team.
        #[arg(required = true)]
        data: Vec<PathBuf>,
        /// Fraction of all turns used for training.
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Coverage of observed pattern statistics by simulation intervals.
    Patterns {
        data: PathBuf,
        /// Saved FULL fit; fitted from the data when omitted.
        #[arg(long)]
        full: Option<PathBuf>,
        /// Saved REDUCED fit; fitted from the data when omitted.
        #[arg(long)]
        reduced: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
        replications: usize,
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        /// Shortest two-speaker window counted as a long exchange.
        #[arg(long, default_value_t = DEFAULT_MIN_EXCHANGE)]
        min_exchange: usize,
        #[arg(long)]
        dataset: Option<String>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Rank trait models for the fitted pi and d of every member.
    Traits {
        /// Saved fits, one per team; the dataset label names the team.
        #[arg(required = true)]
        fits: Vec<PathBuf>,
        #[arg(long)]
        traits: PathBuf,
    },
}
