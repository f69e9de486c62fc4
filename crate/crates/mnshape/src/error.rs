use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Working precision below the minimum needed for the conditioning
    /// regimes this crate targets.
    #[error("precision of {digits} digits is insufficient (minimum 50)")]
    PrecisionTooLow { digits: u32 },

    /// An argument fell outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The (n, beta) pair is not covered by any of the three parameter cases.
    #[error("unsupported parameter case: n = {n}, beta = {beta}")]
    UnsupportedCase { n: u32, beta: String },

    /// The node-degree rule produced a degree below 1; the spacing parameter
    /// is too large for the requested shape parameter.
    #[error("degenerate degree: floor rule gives l < 1 for c = {c}, delta = {delta}")]
    DegenerateDegree { c: String, delta: String },

    /// Elimination hit a pivot too small for the working precision; the
    /// caller should escalate digits and retry.
    #[error("singular matrix at {digits} digits (pivot magnitude below 1e-{})", digits - 10)]
    SingularMatrix { digits: u32 },

    /// The centers do not determine the polynomial space required by the
    /// kernel's conditional positive definiteness order.
    #[error("centers are not a determining set for the degree-{degree} polynomial space")]
    NotDetermining { degree: u32 },

    /// An operation that requires a nonempty point set received an empty one.
    #[error("empty point set")]
    EmptySet,

    /// Failed to parse a numeric or configuration value.
    #[error("parse error: {0}")]
    Parse(String),

    /// A numerical procedure could not reach its contract (after retries).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
