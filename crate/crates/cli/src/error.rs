use std::fmt;
use std::process::ExitCode;

use hybridzo::optimizer::DivergenceReport;
use hybridzo::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    CheckFailed = 1,
    Config = 2,
    Diverged = 3,
    Numeric = 4,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl fmt::Display) -> Self {
        Self {
            status: Status::Config,
            message: message.to_string(),
        }
    }

    pub fn diverged(report: &DivergenceReport) -> Self {
        Self {
            status: Status::Diverged,
            message: report.to_string(),
        }
    }

    pub fn check_failed(message: impl fmt::Display) -> Self {
        Self {
            status: Status::CheckFailed,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Diverged(_) => Status::Diverged,
            Error::NonFinite(_) | Error::NonFiniteUpdate { .. } => Status::Numeric,
            _ => Status::Config,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::config(format!("{e:#}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
