use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("state {state:?} lies outside the domain box of {system}")]
    OutOfDomain { system: String, state: Vec<f64> },

    #[error("observable is not defined at {state:?}: {reason}")]
    ObservableDomain { state: Vec<f64>, reason: String },

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("empty sample set")]
    EmptySamples,

    #[error("empty pair set")]
    EmptyPairSet,

    #[error("trajectory of length {len} is shorter than delay count {m}")]
    TrajectoryTooShort { len: usize, m: usize },

    #[error("sample {index} is not covered by any cover element")]
    Uncovered { index: usize },

    #[error("not enough scales: {0}")]
    InsufficientScales(String),

    #[error("no usable scale: every scale was dropped for lack of samples")]
    InsufficientSamples,

    #[error("zero margin: the delay map does not separate pair {argmin}")]
    ZeroMargin { argmin: usize },

    #[error(
        "cover order bound unachievable for period class n={n}: best order {order}, need < {bound}"
    )]
    CoverOrderBound { n: usize, order: i64, bound: f64 },

    #[error("no cover of period class n={n} meets the oscillation bound {bound} above scale floor")]
    OscillationBound { n: usize, bound: f64 },

    #[error("general position not reached in batch {batch} after {rounds} rounds")]
    GeneralPositionExhausted { batch: usize, rounds: usize },

    #[error("perturbation failed verification: {0}")]
    VerificationFailed(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
