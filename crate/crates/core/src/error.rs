use thiserror::Error;

/// Every failure the engine can report.
///
/// Variants fall into two classes: validation failures (bad input, malformed
/// query) and hypothesis failures (the input is well formed but some exact
/// check the theory requires did not pass). [`Error::is_hypothesis`] tells
/// them apart; the command line maps them to exit codes 2 and 1.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter at `{path}`: {reason}")]
    InvalidParameter { path: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("degenerate input at {location}: {detail}")]
    DegenerateInput { location: String, detail: String },

    #[error("degenerate orbit at {location}: {detail}")]
    DegenerateOrbit { location: String, detail: String },

    #[error("beta not certified: {0}")]
    BetaNotCertified(String),

    #[error("search exhausted below p_n = {limit}")]
    SearchExhausted { limit: u64 },

    #[error("beta = {beta} lies outside the open window ({lo}, {hi})")]
    OutsideWindow {
        beta: String,
        lo: String,
        hi: String,
    },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("query value {value} coincides with a bar birth")]
    QueryAtBirth { value: String },

    #[error("certificates do not chain: {0}")]
    ChainMismatch(String),

    #[error("double-knot hypothesis failed: {0}")]
    DoubleKnotHypothesisFailed(String),

    #[error("engine mismatch: {0}")]
    EngineMismatch(String),
}

impl Error {
    pub(crate) fn param(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::Parse(_) => "Parse",
            Error::DegenerateInput { .. } => "DegenerateInput",
            Error::DegenerateOrbit { .. } => "DegenerateOrbit",
            Error::BetaNotCertified(_) => "BetaNotCertified",
            Error::SearchExhausted { .. } => "SearchExhausted",
            Error::OutsideWindow { .. } => "OutsideWindow",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::QueryAtBirth { .. } => "QueryAtBirth",
            Error::ChainMismatch(_) => "ChainMismatch",
            Error::DoubleKnotHypothesisFailed(_) => "DoubleKnotHypothesisFailed",
            Error::EngineMismatch(_) => "EngineMismatch",
        }
    }

    /// True when the input was well formed but a required exact check failed.
    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInput { .. }
                | Error::DegenerateOrbit { .. }
                | Error::HypothesisViolated(_)
                | Error::DoubleKnotHypothesisFailed(_)
                | Error::EngineMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
