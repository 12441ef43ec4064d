//! `cw-randers`: validate specs, solve for constant-length metrics and run
//! the Monte-Carlo checkers, writing CSV reports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig, Settings};

#[derive(Debug, Parser)]
#[command(name = "cw-randers", version, about = "Homogeneous Randers spheres: constant-length Killing fields and Clifford-Wolf translations")]
struct Cli {
    /// JSON run configuration, or a bare spec object.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; every worker stream is derived from it.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Report destination (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the command's pass threshold.
    #[arg(long, global = true, value_name = "F")]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the inequalities of a spec; prints one violation per line.
    Validate {
        /// Spec JSON file (defaults to the spec in --config).
        spec: Option<PathBuf>,
    },
    /// Solve (a, b, c) for a two-eigenvalue generator of length L.
    Solve(ParamArgs),
    /// Run a checker and write its CSV report.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Debug, Clone, Default, Args)]
struct ParamArgs {
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x2: Option<f64>,
    #[arg(long = "L", value_name = "L")]
    length: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// F over Haar conjugates of the generator; passes when constant.
    Orbit(ParamArgs),
    /// Symplectic sphere with a2 != b: only central candidates are constant.
    SpScan {
        /// Random non-central candidates added to the fixed ones.
        #[arg(long, default_value_t = 4)]
        candidates: usize,
    },
    /// Phase-interval bound on Haar pairs (P, Q).
    Eigenlemma {
        /// Matrix sizes, cycled over the trials.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        n: Vec<usize>,
    },
    /// Persistence of eigenvalue 1 along exp(tB) U exp(-tB) U*.
    Commutator {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// exp(t1 X1) != exp(t2 X2) for conjugates of a two-eigenvalue X.
    Nonintersection {
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// All time-pi endpoints of the SU(2) flows from one point coincide.
    Focus {
        /// Length of V = v diag(i, -i).
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        v: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Graph-oracle displacement d(x, phi_t(x)) over sampled vertices.
    Displacement {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        t: f64,
        /// Graph vertices.
        #[arg(long, default_value_t = 20_000)]
        points: usize,
        /// Nearest neighbours per vertex.
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl From<cw_randers::Error> for CliError {
    fn from(e: cw_randers::Error) -> Self {
        use cw_randers::Error as E;
        match e {
            E::InfeasibleParams(_)
            | E::NotKvfAdmissible { .. }
            | E::BranchUndefined
            | E::TrackingFailed { .. } => CliError::Failed(e.to_string()),
            E::InvalidInput(_)
            | E::NotApplicable(_)
            | E::ResolutionTooCoarse(_)
            | E::Io(_)
            | E::Json(_)
            | E::Csv(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let command = match cli.command {
        Some(c) => c,
        None => command_from_config(&config)?,
    };
    let flags = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out,
        tolerance: cli.tolerance,
    };
    let settings = Settings::merge(config, flags)?;
    log::info!("seed {}", settings.seed);
    match command {
        Command::Validate { spec } => commands::validate(&settings, spec.as_deref()),
        Command::Solve(p) => commands::solve(&settings, &p),
        Command::Verify(v) => match v {
            Verify::Orbit(p) => commands::orbit(&settings, &p),
            Verify::SpScan { candidates } => commands::sp_scan(&settings, candidates),
            Verify::Eigenlemma { n } => commands::eigenlemma(&settings, &n),
            Verify::Commutator { k } => commands::commutator(&settings, k),
            Verify::Nonintersection { x, l, m } => commands::nonintersection(&settings, x, l, m),
            Verify::Focus { v, samples } => commands::focus(&settings, v, samples),
            Verify::Displacement {
                params,
                t,
                points,
                k,
                samples,
            } => commands::displacement(&settings, &params, t, points, k, samples),
        },
    }
}

/// Parses the `command` field of a config file, e.g. `"verify orbit"`.
fn command_from_config(config: &RunConfig) -> Result<Command, CliError> {
    let Some(text) = &config.command else {
        return Err(CliError::Usage("no command given on the command line or in the config".into()));
    };
    let argv = std::iter::once("cw-randers").chain(text.split_whitespace());
    let parsed = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(format!("config command: {e}")))?;
    parsed
        .command
        .ok_or_else(|| CliError::Usage("config command is empty".into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RANDERS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
