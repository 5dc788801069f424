use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A binary input (pcap, CORP, AMP1, CXFR) did not conform to its format.
    #[error("format error in `{field}` at byte offset {offset}: {reason}")]
    Format {
        field: &'static str,
        offset: usize,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(field: &'static str, offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            field,
            offset,
            reason: reason.into(),
        }
    }

    /// Name of the offending field for format errors.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Error::Format { field, .. } => Some(field),
            _ => None,
        }
    }
}
