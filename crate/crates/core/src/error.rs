use thiserror::Error;

/// Errors produced by the distribution, model and bound layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot parse rational literal `{0}`")]
    ParseRational(String),

    #[error("cannot parse distribution: {0}")]
    ParseDistribution(String),

    #[error("parameter `{name}` out of range: {reason}")]
    OutOfRange { name: &'static str, reason: String },

    #[error("invalid problem configuration: {0}")]
    InvalidProblem(String),

    #[error("the {0} domain has no training samples")]
    EmptyDomain(&'static str),

    #[error("atom {0} is not in the support of the {1} distribution")]
    NotInSupport(String, &'static str),

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("lambda search did not converge: {0}")]
    NonConvergence(String),

    #[error("enumeration too large: {0} tuples exceeds the limit of {1}")]
    OversizeEnumeration(u128, u128),
}

pub type Result<T> = std::result::Result<T, Error>;
