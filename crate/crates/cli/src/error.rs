use thiserror::Error;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input data or invalid flag values.
    #[error("{0}")]
    Input(String),

    /// The solver did not reach its tolerances or broke down numerically.
    #[error("{0}")]
    NotConverged(String),

    /// Every EM restart ended with a degenerate component.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }
}

impl From<logconcave::Error> for CliError {
    fn from(e: logconcave::Error) -> Self {
        use logconcave::Error as E;
        match e {
            E::SolverFailure(_) => CliError::NotConverged(e.to_string()),
            E::DegenerateMixture(_) => CliError::Degenerate(e.to_string()),
            E::DegenerateSample { .. }
            | E::InvalidData(_)
            | E::InvalidParams(_)
            | E::OutOfSupport { .. } => CliError::Input(e.to_string()),
        }
    }
}
