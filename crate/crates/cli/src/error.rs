use thiserror::Error;

use turntaker::Error as CoreError;

/// Failure classes mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidRoster(_)
            | CoreError::InvalidParams(_)
            | CoreError::InvalidSequence(_)
            | CoreError::RepeatedSpeaker { .. }
            | CoreError::ImpossibleHistory { .. }
            | CoreError::EmptySequence
            | CoreError::InsufficientData(_)
            | CoreError::InvalidArgument(_)
            | CoreError::PerfectFit(_)
            | CoreError::Rows(_)
            | CoreError::Schema(_)
            | CoreError::SchemaVersion { .. }
            | CoreError::Io(_)
            | CoreError::Json(_)
            | CoreError::Csv(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_problems_are_usage_errors() {
        assert_eq!(CliError::from(CoreError::Schema("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::InsufficientData("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::DegenerateDistribution).exit_code(), 1);
        assert_eq!(CliError::from(CoreError::ZeroGap).exit_code(), 1);
    }
}
