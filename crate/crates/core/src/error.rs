use thiserror::Error;

/// Errors raised by the simulation pipeline, the calibration driver and the
/// file layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical convergence failure: {0}")]
    Convergence(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence(_) => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Convergence("x".into()).exit_code(), 4);
        assert_eq!(Error::validation("k", "m").exit_code(), 3);
        assert_eq!(Error::MissingKey("mode".into()).exit_code(), 3);
        assert_eq!(
            Error::Parse {
                line: 1,
                message: "m".into()
            }
            .exit_code(),
            3
        );
        assert_eq!(Error::from(std::io::Error::other("x")).exit_code(), 1);
    }
}
