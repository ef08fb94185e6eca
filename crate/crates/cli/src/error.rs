use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("missing {what} at {}; run `rotor-vrae {stage}` first", path.display())]
    MissingArtifact {
        what: &'static str,
        path: PathBuf,
        stage: &'static str,
    },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit status: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::MissingArtifact { .. } | CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<rotor_vrae::Error> for CliError {
    fn from(e: rotor_vrae::Error) -> Self {
        match e {
            rotor_vrae::Error::NonFinite(_) => CliError::Numerical(e.to_string()),
            rotor_vrae::Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
