use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("degenerate fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn capability<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capability(msg.into()))
}
