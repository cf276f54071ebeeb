use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// `NotInPrymImage` is the only variant that reports a *mathematical* negative
/// (the input is well formed but no covering produces it); every other variant
/// signals malformed or out-of-range input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("subset of odd cardinality {0} does not define a 2-torsion class")]
    OddParity(usize),
    #[error("classes live on different Weierstrass universes")]
    UniverseMismatch,
    #[error("class has no expressible pullback: {0}")]
    NotLiftableRepresentation(String),
    #[error("invalid ramification: {0}")]
    InvalidRamification(String),
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("genus {0} curve admits no Klein subgroup")]
    NoKleinSubgroup(u32),
    #[error("no generator table for node {0}")]
    UnsupportedNode(String),
    #[error("datum is not in the image of the Prym map: {0}")]
    NotInPrymImage(String),
    #[error("invalid Prym datum: {0}")]
    InvalidDatum(String),
    #[error("curve is singular: {0}")]
    SingularCurve(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for verified mathematical negatives as opposed to input errors.
    pub fn is_negative_result(&self) -> bool {
        matches!(self, Error::NotInPrymImage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
