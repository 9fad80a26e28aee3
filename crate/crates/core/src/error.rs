use thiserror::Error;

/// Failure categories shared by every module of the crate.
///
/// The categories are coarse on purpose: the command-line front end maps
/// them onto process exit codes, and tests match on the variant.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range arguments.
    #[error("input error: {0}")]
    Input(String),

    /// A precondition on the relationship between arguments was violated,
    /// e.g. an assignment that does not satisfy the instance it is paired with.
    #[error("contract violated: {0}")]
    Contract(String),

    /// The model or parameter lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model construction produced something that fails one of the
    /// structural properties it was supposed to have.
    #[error("construction error: {0}")]
    Construction(String),

    /// A sampler exhausted its retry budget.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// The request exceeds what an exhaustive method can handle.
    #[error("scale error: {0}")]
    Scale(String),

    /// The model makes a variational quantity degenerate.
    #[error("degenerate model: {0}")]
    Degenerate(String),

    /// An invariant check on computed output failed.
    #[error("assertion failed: {0}")]
    Assertion(String),
}

pub type Result<T> = std::result::Result<T, Error>;
