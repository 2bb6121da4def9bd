//! Exit-code policy: 0 success, 2 usage/config, 3 data, 4 numeric failure.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unusable configuration.
    Usage(String),
    /// Input data could not be read or is inconsistent.
    Data(String),
    /// A numeric computation failed (undefined metric, optimizer collapse).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn data(e: impl fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    pub fn numeric(e: impl fmt::Display) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
