use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("inconsistent parity for pair ({i}, {j}): known {known}, observed {observed}")]
    Consistency {
        i: usize,
        j: usize,
        known: u8,
        observed: u8,
    },

    #[error("argument outside the formula's domain: {0}")]
    OutOfDomain(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(&'static str),

    #[error("invalid attack model: {0}")]
    InvalidModel(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
