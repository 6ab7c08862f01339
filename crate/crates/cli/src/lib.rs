//! Command-line front end for the confocal shell resonance solver.
//!
//! Each command reads a JSON [`config::RunConfig`] and writes CSV or JSON
//! files into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(calr_core::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<calr_core::Error> for CliError {
    fn from(e: calr_core::Error) -> Self {
        use calr_core::Error as E;
        match e {
            E::InvalidGeometry(_) | E::InvalidArgument(_) | E::SourceInsideShell { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "calr-lab",
    version,
    about = "Resonance of a lossy plasmonic shell on confocal ellipses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and field grids.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form eigenvalues, eigenvectors and norms per mode.
    Spectrum(Common),
    /// Regime, critical radius and bounded-field radius.
    CriticalRadius(Common),
    /// Loss sweep with dissipated power and the resonance verdict.
    Sweep(Common),
    /// Total potential on a Cartesian grid.
    Field(Common),
    /// Cross-checks against the Nyström oracle and closed-form identities.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Negate the inner diagonal block of the oracle matrix.
        #[arg(long, hide = true)]
        debug_flip_sign: bool,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Spectrum(c) | Command::CriticalRadius(c) | Command::Sweep(c) | Command::Field(c) => c,
            Command::Validate { common, .. } => common,
        }
    }
}

fn dispatch(command: &Command) -> Result<commands::Outcome, CliError> {
    let common = command.common();
    if let Some(k) = common.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // fails only when the global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let config = config::RunConfig::from_path(&common.config)?;
    let out = config.output_dir(common.out.as_deref());
    match command {
        Command::Spectrum(_) => commands::spectrum(&config, &out),
        Command::CriticalRadius(_) => commands::critical_radius_cmd(&config, &out),
        Command::Sweep(_) => commands::sweep(&config, &out),
        Command::Field(_) => commands::field(&config, &out),
        Command::Validate { debug_flip_sign, .. } => validate_cmd(&config, &out, *debug_flip_sign),
    }
}

fn validate_cmd(config: &config::RunConfig, out: &Path, flip: bool) -> Result<commands::Outcome, CliError> {
    let report = validate::run(config, flip)?;
    let path = output::write(out, "validate.json", &output::json(&report))?;
    for c in &report.checks {
        println!(
            "{:<13} {}: {} (expected {})",
            format!("[{:?}]", c.status).to_lowercase(),
            c.name,
            c.observed,
            c.expected
        );
    }
    let s = &report.summary;
    let summary = format!(
        "{} passed, {} failed, {} indeterminate",
        s.passed, s.failed, s.indeterminate
    );
    if report.failed() {
        return Err(CliError::Validation(format!("{summary}; report in {}", path.display())));
    }
    Ok(commands::Outcome {
        files: vec![path],
        summary,
    })
}

/// Runs a parsed command line and reports on stdout and stderr.
pub fn run(cli: Cli) -> ExitCode {
    match dispatch(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("calr-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
