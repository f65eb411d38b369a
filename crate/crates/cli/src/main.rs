use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "glottochron", version, about = "Bayesian dating of language families from cognate data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the MC³ sampler and write traces, tree samples and move statistics.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads; independent runs are spread over them.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Build the consensus tree and root-age report from a finished run.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Fraction of each run discarded as burn-in (overrides the config).
        #[arg(long)]
        burn_in: Option<f64>,
        /// Subgroup file with `name: taxon, taxon @ reference_age` lines.
        #[arg(long)]
        subgroups: Option<PathBuf>,
    },
    /// Bayes factor between the two root-age windows from posterior and prior traces.
    Bf {
        #[arg(long, num_args = 1.., required = true)]
        posterior: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        prior: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        burn_in: f64,
        /// Steppe window as `min,max` in years BP.
        #[arg(long, value_parser = parse_window)]
        steppe: Option<(f64, f64)>,
        /// Anatolian window as `min,max` in years BP.
        #[arg(long, value_parser = parse_window)]
        anatolian: Option<(f64, f64)>,
    },
    /// AICM of each trace's log-likelihood column (lower is better).
    Aicm {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        burn_in: f64,
    },
    /// Check the config, matrix, calibrations and start tree without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate a dated tree and cognate matrix under the configured prior.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        taxa: usize,
        #[arg(long, default_value_t = 2)]
        fossils: usize,
        #[arg(long, default_value_t = 200)]
        sites: usize,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `min,max`")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if a >= b {
        return Err("window needs min < max".into());
    }
    Ok((a, b))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { common, threads } => commands::run(&common, threads),
        Command::Summarize {
            common,
            burn_in,
            subgroups,
        } => commands::summarize(&common, burn_in, subgroups.as_deref()),
        Command::Bf {
            posterior,
            prior,
            burn_in,
            steppe,
            anatolian,
        } => commands::bf(&posterior, &prior, burn_in, steppe, anatolian),
        Command::Aicm { traces, burn_in } => commands::aicm(&traces, burn_in),
        Command::Validate { config } => commands::validate(&config),
        Command::Simulate {
            common,
            taxa,
            fossils,
            sites,
        } => commands::simulate(&common, taxa, fossils, sites),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
