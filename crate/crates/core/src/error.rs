use thiserror::Error;

/// Errors raised across the workbench.
///
/// The variants follow the failure classes the operations can hit: bad
/// inputs (`Domain`, `Parse`, `Contract`), resource caps, exhausted
/// light-cone windows, and numerical trouble.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("window exhausted: need radius {needed}, have {available}")]
    WindowExhausted { needed: u32, available: u32 },

    #[error("not yet reached within horizon {horizon}: {what}")]
    NotYetReached { horizon: usize, what: String },

    #[error("split undefined: {0}")]
    SplitUndefined(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// `δ = 0`: no decay bound exists, but the measured values are kept.
    #[error("decay bound unavailable: ν is not faithful (δ = 0)")]
    BoundUnavailable(Box<crate::boundary::DecayReport>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
