//! `cqed`: transmission and photon-correlation spectra of a cavity with
//! emitters, from a JSON run configuration.
//!
//! Exit codes: 0 success, 2 configuration or I/O problem, 3 numerical
//! failure, 4 oracle deviation above tolerance (`validate`).

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::Document;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("numerical failure: {0}")]
    Numerical(cqed_core::Error),
}

impl From<cqed_core::Error> for CliError {
    fn from(e: cqed_core::Error) -> Self {
        use cqed_core::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidGrid(_) | E::OracleTooLarge(_) | E::WeakDrive { .. } | E::UnsupportedLevel(_) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Numerical(e),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "cqed", version, about = "Few-photon transport through a cavity coupled to N emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent. An `n_sweep` writes `<stem>_N<n>.<ext>` per entry.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid and Monte-Carlo parallelism.
    #[arg(long, env = "CQED_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// T and g2(0) over the frequency grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Adds per-eigenstate contribution magnitude and phase columns.
        #[arg(long)]
        contributions: bool,
    },
    /// g2(tau) at one drive frequency.
    G2tau {
        #[command(flatten)]
        common: Common,
    },
    /// Inhomogeneously broadened ensembles.
    Mc {
        #[command(flatten)]
        common: Common,
    },
    /// Identical emitters against their large-N limits.
    IdenticalLimits {
        #[command(flatten)]
        common: Common,
    },
    /// Master-equation oracle against the scattering route.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Test hook: scales kappa_c in the scattering route only.
        #[arg(long, hide = true, default_value_t = 1.0)]
        corrupt_kappa_c: f64,
    },
    /// Wall-time scaling with N.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

fn output_path(out: &Path, suffix: Option<&str>) -> PathBuf {
    let Some(suffix) = suffix else { return out.to_path_buf() };
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    out.with_file_name(name)
}

fn check_out_dir(out: Option<&Path>) -> Result<(), CliError> {
    let Some(out) = out else { return Ok(()) };
    let dir = match out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(CliError::Output(format!("{}: directory does not exist", dir.display())));
    }
    if out.is_dir() {
        return Err(CliError::Output(format!("{}: is a directory", out.display())));
    }
    Ok(())
}

fn emit(docs: &[Document], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(out) => {
            for d in docs {
                let path = output_path(out, d.suffix.as_deref());
                std::fs::write(&path, &d.body).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            }
        }
        None => {
            if docs.len() > 1 {
                return Err(CliError::Output("an N sweep needs --out".into()));
            }
            for d in docs {
                print!("{}", d.body);
            }
        }
    }
    for s in docs.iter().filter_map(|d| d.summary.as_deref()) {
        eprintln!("{s}");
    }
    Ok(())
}

/// Returns the exit status on success paths (0, or 4 for a failed validation).
fn run(cli: Cli) -> Result<u8, CliError> {
    let common = match &cli.command {
        Command::Spectrum { common, .. }
        | Command::G2tau { common }
        | Command::Mc { common }
        | Command::IdenticalLimits { common }
        | Command::Validate { common, .. }
        | Command::Bench { common } => common,
    };
    let cfg = RunConfig::load(&common.config)?;
    check_out_dir(common.out.as_deref())?;
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let f = common.format;
    let mut status = 0;
    let docs = match &cli.command {
        Command::Spectrum { contributions, .. } => commands::spectrum(&cfg, f, *contributions)?,
        Command::G2tau { .. } => commands::g2tau(&cfg, f)?,
        Command::Mc { .. } => commands::mc(&cfg, f, common.seed)?,
        Command::IdenticalLimits { .. } => commands::identical_limits(&cfg, f)?,
        Command::Bench { .. } => commands::bench(&cfg, f, common.seed)?,
        Command::Validate { corrupt_kappa_c, .. } => {
            let (docs, pass) = commands::validate(&cfg, f, *corrupt_kappa_c)?;
            if !pass {
                status = 4;
            }
            docs
        }
    };
    emit(&docs, common.out.as_deref())?;
    Ok(status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
