use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instance format: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("capacity exceeded: {what} ({size} > {limit})")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("configuration: {0}")]
    Configuration(String),
    #[error("setup: {0}")]
    Setup(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn capacity(what: &'static str, size: usize, limit: usize) -> Result<()> {
    if size > limit {
        Err(Error::Capacity { what, size, limit })
    } else {
        Ok(())
    }
}
