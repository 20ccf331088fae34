mod args;
mod commands;
mod output;
mod sweep;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use qanon::protocols::ProtocolConfig;
use thiserror::Error;

use args::{Cli, Command};
use output::Output;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable or invalid config, ill-posed attack, backend
    /// mismatch, unwritable output.
    #[error("{0}")]
    Config(String),
}

impl CliError {
    fn io(e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("i/o error: {e}"))
    }
}

impl From<qanon::protocols::ProtocolError> for CliError {
    fn from(e: qanon::protocols::ProtocolError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<qanon::adversary::AdversaryError> for CliError {
    fn from(e: qanon::adversary::AdversaryError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// How a command that produced output ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerifyFailed,
    /// A single run ended in a protocol abort.
    Aborted,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::VerifyFailed => 1,
            Status::Aborted => 3,
        }
    }
}

/// Settings shared by every command after defaults are resolved.
pub struct Run {
    pub config: ProtocolConfig,
    pub trials: u64,
    pub master_seed: u64,
    /// Whether `--backend` was given explicitly.
    pub backend_forced: bool,
}

fn load_config(path: Option<&Path>) -> Result<ProtocolConfig, CliError> {
    let Some(path) = path else {
        return Ok(ProtocolConfig::new(4));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(Output, Status), CliError> {
    let common = &cli.common;
    if let Some(w) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {w} workers: {e}")))?;
    }
    let mut config = load_config(common.config.as_deref())?;
    if let Some(b) = common.backend {
        config.backend = b.into();
    }
    let default_trials = if matches!(cli.command, Command::Sweep { .. }) {
        10_000
    } else {
        1
    };
    let trials = common.trials.unwrap_or(default_trials);
    if trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let run = Run {
        master_seed: common.seed.unwrap_or(config.seed),
        config,
        trials,
        backend_forced: common.backend.is_some(),
    };
    match cli.command {
        Command::Notify {
            modified,
            transcript,
        } => commands::notify(&run, modified, transcript.as_deref()),
        Command::Share { transcript } => commands::share(&run, transcript.as_deref()),
        Command::Compare { scheme, transcript } => {
            commands::compare(&run, scheme, transcript.as_deref())
        }
        Command::Pipeline { transcript } => commands::pipeline(&run, transcript.as_deref()),
        Command::Attack { spec } => commands::attack(&run, &spec),
        Command::Sweep {
            grid,
            ns,
            multi_ns,
            ss,
            p_zs,
            ks,
            seeds,
        } => sweep::sweep(
            &run,
            grid,
            &sweep::Axes {
                ns,
                multi_ns,
                ss,
                p_zs,
                ks,
                seeds,
            },
        ),
        Command::Verify => commands::verify(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.common.format;
    let path = cli.common.output.clone();
    let result = execute(cli).and_then(|(out, status)| {
        out.write(format, path.as_deref())?;
        for note in &out.notes {
            eprintln!("{note}");
        }
        Ok(status)
    });
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
