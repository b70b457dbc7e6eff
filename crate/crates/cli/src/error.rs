use std::fmt;

/// Failure of a subcommand, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or parameters (exit 2).
    Input(String),
    /// Estimation, numerical or I/O failure (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<glauber::Error> for CliError {
    fn from(e: glauber::Error) -> Self {
        use glauber::Error as E;
        match e {
            E::Parameter(_) | E::Domain(_) | E::Model(_) | E::Capacity { .. } => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json: {e}"))
    }
}
