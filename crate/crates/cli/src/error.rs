use thiserror::Error;

/// Failures surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// The diagnostic without the category prefix.
    pub fn detail(&self) -> String {
        match self {
            CliError::Usage(s) | CliError::Input(s) | CliError::Numerical(s) => s.clone(),
            CliError::Io(e) => e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<potcast::error::Error> for CliError {
    fn from(e: potcast::error::Error) -> Self {
        use potcast::error::Error as E;
        match e {
            E::Domain(_) => CliError::Usage(e.to_string()),
            E::Input(_) | E::Degenerate(_) => CliError::Input(e.to_string()),
            E::Singular(_) | E::Quadrature { .. } | E::ChainDegenerate { .. } | E::Underflow(_) | E::Experiment(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
