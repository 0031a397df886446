use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A floating-point argument lies inside the certified enclosure of an
    /// enumerated rational, so an order decision would be a guess.
    #[error("cannot decide {numerator}/{denominator} <= {value:e}: argument inside the certified enclosure")]
    AmbiguousComparison {
        value: f64,
        numerator: u64,
        denominator: u64,
    },
    #[error("profile minimum {min_value} near x = {at} is not provably positive")]
    NonPositiveProfile { min_value: f64, at: f64 },
    #[error("sampled radius {radius} at x = {at} is not positive")]
    NonPositiveRadius { at: f64, radius: f64 },
    #[error("box-counting regression needs at least 3 depths, got {got}")]
    InsufficientScales { got: usize },
    #[error("curve sample is not closed")]
    CurveNotClosed,
    #[error("curve sample is empty")]
    EmptySample,
    #[error("target set is empty")]
    EmptyTargets,
    #[error("erosion by {epsilon} removed every cell")]
    EmptyErosion { epsilon: f64 },
    #[error("input region is empty")]
    EmptyInput,
    #[error("no ladder epsilon passed verification")]
    NoneFound,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
}
