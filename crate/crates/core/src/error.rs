use thiserror::Error;

/// Errors surfaced by dataset loading, parameter validation and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("exact oracle refused: n = {n} exceeds the oracle cap of {cap} nodes (enable estimation to use sampled queries)")]
    OracleCap { n: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn format_err<T>(offset: u64, msg: impl Into<String>) -> Result<T> {
    Err(Error::Format {
        offset,
        message: msg.into(),
    })
}
