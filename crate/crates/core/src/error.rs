use alloc::string::String;

/// Error taxonomy shared by the core and the companion crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("boundary singularity: {0}")]
    BoundarySingularity(String),

    #[error("degenerate spectrum: eigenvalue pair sum {0:e} below threshold")]
    DegenerateSpectrum(f64),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("config parse error at {location}: {message}")]
    ConfigParse { location: String, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }

    pub(crate) fn boundary(msg: impl Into<String>) -> Self {
        Error::BoundarySingularity(msg.into())
    }
}
