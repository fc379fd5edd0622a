use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural or probabilistic validity check.
    #[error("validation error: {0}")]
    Validation(String),

    /// Input is valid on its own but outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension { context: &'static str, expected: usize, actual: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at iteration {iteration} (learning rate {learning_rate}): {detail}")]
    Diverged { iteration: usize, learning_rate: f64, detail: String },

    #[error(transparent)]
    Idx(#[from] crate::sources::idx::IdxError),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

/// Process exit status for a failed command: 2 for bad input or
/// configuration, 3 for failures while running.
impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) | Error::Dimension { .. } | Error::Idx(_) | Error::Parse(_) | Error::Config(_) => 2,
            Error::Domain(_) | Error::NonFinite(_) | Error::Diverged { .. } | Error::Io { .. } => 3,
        }
    }
}
