use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a generator: entry ({row}, {col}) = {value}: {reason}")]
    NotAGenerator {
        row: usize,
        col: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("invalid transition matrix: {0}")]
    BadTransition(String),

    #[error("invalid probability vector: {0}")]
    BadDistribution(String),

    #[error("time order violated: end {end} precedes start {start}")]
    TimeOrder { start: f64, end: f64 },

    #[error("state {state} out of range for a {n}-state chain")]
    StateOutOfRange { state: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series is not mean reverting: {0}")]
    NotMeanReverting(String),

    #[error("too few points: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("no samples")]
    EmptySamples,

    #[error("gamma must be positive and finite, got {0}")]
    NonPositiveGamma(f64),

    #[error("price series: {0}")]
    Series(String),
}
