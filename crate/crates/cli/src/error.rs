use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qtransport::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for numerical failures, 1 for everything else (bad specs, bad
    /// config, unreadable files).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let numerical = CliError::from(qtransport::Error::NumericalFailure("x".into()));
        assert_eq!(numerical.exit_code(), 2);
        let parse = CliError::from(qtransport::Error::Parse {
            position: 3,
            message: "x".into(),
        });
        assert_eq!(parse.exit_code(), 1);
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
    }
}
