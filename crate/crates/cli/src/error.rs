use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file, preset or output path. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable or inconsistent input data. Exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// A fit or reconstruction failed numerically. Exit code 4.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<homodyne::Error> for CliError {
    fn from(e: homodyne::Error) -> Self {
        match e {
            homodyne::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Parameter errors raised while building the run from its config.
pub fn config_err(e: homodyne::Error) -> CliError {
    CliError::Config(e.to_string())
}
