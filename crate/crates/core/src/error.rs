use crate::bits::BitString;
use thiserror::Error;

/// Errors raised by strategy construction, validation and the casino machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing value for state {0:?}")]
    MissingState(BitString),
    #[error("malformed input: {0}")]
    Structure(String),
    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),
    #[error("invalid bit string {0:?}")]
    InvalidBits(String),
    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("both factors bet at state {0:?}")]
    SharedBettingLevel(BitString),
    #[error("martingale law fails at state {0:?}")]
    NotMartingale(BitString),
    #[error("input carries no parity tag")]
    Untagged,
    #[error("components do not share the tag {0}")]
    TagMismatch(String),
    #[error("precondition failed: {what} (witness {witness})")]
    Precondition { what: String, witness: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("capital precondition violated at stage {stage}: M(lambda) = {value}")]
    CapitalPrecondition { stage: u64, value: String },
    #[error("engine capital exhausted at bit {0}")]
    EngineExhausted(usize),
    #[error("no surviving extension below {0:?}")]
    NoSurvivor(BitString),
    #[error("bit budget of {0} exhausted before reaching the target")]
    BitBudget(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by unreadable or malformed input rather than
    /// a failed domain check.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MissingState(_)
                | Error::Structure(_)
                | Error::InvalidRational(_)
                | Error::InvalidBits(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }

    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingState(_) => "missing_state",
            Error::Structure(_) => "structure",
            Error::InvalidRational(_) => "invalid_rational",
            Error::InvalidBits(_) => "invalid_bits",
            Error::DepthMismatch { .. } => "depth_mismatch",
            Error::NegativeWeight(_) => "negative_weight",
            Error::LengthMismatch(_) => "length_mismatch",
            Error::SharedBettingLevel(_) => "shared_betting_level",
            Error::NotMartingale(_) => "not_martingale",
            Error::Untagged => "untagged",
            Error::TagMismatch(_) => "tag_mismatch",
            Error::Precondition { .. } => "precondition",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidProgram(_) => "invalid_program",
            Error::CapitalPrecondition { .. } => "capital_precondition",
            Error::EngineExhausted(_) => "engine_exhausted",
            Error::NoSurvivor(_) => "no_survivor",
            Error::BitBudget(_) => "bit_budget",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn precondition(what: impl Into<String>, witness: impl std::fmt::Display) -> Self {
        Error::Precondition {
            what: what.into(),
            witness: witness.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
