//! `shorphase` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 when a
//! computation fails or a check does not pass.

mod commands;
mod config;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;
use thiserror::Error;

use commands::{Kind, Report};
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl From<shorphase::Error> for CliError {
    fn from(e: shorphase::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shorphase", version, about = "Order finding with idle-time dynamical phases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multiplicative order of a modulo N.
    Order(Invocation),
    /// Default register sizes for N.
    Sizes(Invocation),
    /// Read-out distribution P(k) at each tau*Delta (`tau_delta,k,P`).
    Distribution(Invocation),
    /// Success probability against tau*Delta (`tau_delta,Pe`).
    SweepDelay(Invocation),
    /// Per-outcome success probability against work register size (`L,k_e,p_e`).
    SweepQubits(Invocation),
    /// Ensemble success probability near matching points for spread splittings.
    SweepSigma(Invocation),
    /// Compare the closed form against the state-vector simulation.
    OracleCheck(Invocation),
}

#[derive(Debug, Args)]
struct Invocation {
    /// TOML file with experiment parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Also write the fully resolved configuration to this path.
    #[arg(long)]
    emit_config: Option<PathBuf>,

    #[command(flatten)]
    params: ExperimentConfig,
}

impl Command {
    fn split(self) -> (Kind, Invocation) {
        match self {
            Command::Order(i) => (Kind::Order, i),
            Command::Sizes(i) => (Kind::Sizes, i),
            Command::Distribution(i) => (Kind::Distribution, i),
            Command::SweepDelay(i) => (Kind::SweepDelay, i),
            Command::SweepQubits(i) => (Kind::SweepQubits, i),
            Command::SweepSigma(i) => (Kind::SweepSigma, i),
            Command::OracleCheck(i) => (Kind::OracleCheck, i),
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".fit.json");
    PathBuf::from(name)
}

fn staged(path: &Path, contents: &str) -> Result<NamedTempFile, CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: io::Error| CliError::Compute(format!("cannot write {}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    Ok(tmp)
}

/// Writes every file or none of them.
fn write_all_or_nothing(files: &[(PathBuf, &str)]) -> Result<(), CliError> {
    let tmps = files.iter().map(|(p, c)| staged(p, c)).collect::<Result<Vec<_>, _>>()?;
    for (tmp, (path, _)) in tmps.into_iter().zip(files) {
        tmp.persist(path).map_err(|e| CliError::Compute(format!("cannot write {}: {}", path.display(), e.error)))?;
    }
    Ok(())
}

fn deliver(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    match out.filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            let mut files = vec![(path.to_path_buf(), report.body.as_str())];
            if let Some(side) = &report.sidecar {
                files.push((sidecar_path(path), side.as_str()));
            }
            write_all_or_nothing(&files)
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(report.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Compute(format!("cannot write output: {e}")))?;
            if let Some(side) = &report.sidecar {
                eprint!("{side}");
            }
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (kind, inv) = command.split();
    let base = match &inv.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let resolved = commands::resolve(kind, base.overlay(inv.params))?;
    if let Some(path) = &inv.emit_config {
        write_all_or_nothing(&[(path.clone(), resolved.to_toml()?.as_str())])?;
    }
    let report = commands::run(kind, &resolved)?;
    deliver(&report, resolved.out.as_deref())?;
    match report.failure {
        Some(msg) => Err(CliError::Compute(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
