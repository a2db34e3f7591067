use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("jump mark inconsistent with band: {0}")]
    BandMismatch(String),

    #[error("coefficient cannot be audited: {0}")]
    Unauditable(String),

    #[error("numerical blow-up at t = {time}")]
    BlowUp { time: f64 },

    #[error("experiment failed: {blowups} of {paths} paths blew up")]
    EnsembleBlowUp { blowups: usize, paths: usize },

    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

    #[error("mark sampling failed: {0}")]
    Sampling(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("malformed noise path file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
