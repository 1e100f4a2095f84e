use thiserror::Error;

/// Errors surfaced by the library. Precondition violations are reported
/// eagerly rather than propagated as garbage values.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("representation search exhausted: {0}")]
    SearchExhausted(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
