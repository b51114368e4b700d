use std::fmt;

/// Command failure, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable input, schema mismatch or invalid configuration.
    Input(String),
    /// A fit or evaluation failed numerically.
    Numerical(String),
    InsufficientData(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::InsufficientData(_) => 4,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::InsufficientData(m) => write!(f, "insufficient data: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<vinerisk::Error> for CliError {
    fn from(e: vinerisk::Error) -> Self {
        use vinerisk::Error as E;
        match e {
            E::Usage(_) | E::Collinear(_) => CliError::Input(e.to_string()),
            E::InsufficientData(_) => CliError::InsufficientData(e.to_string()),
            E::Domain(_) | E::Numerical(_) | E::Convergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
