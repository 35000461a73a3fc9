use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    SumNotOne { sum: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("numeric values required: {0}")]
    MissingValues(String),
    #[error("invalid distortion measure: {0}")]
    InvalidDistortion(String),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("grid [{lo}, {hi}] does not cover required range [{need_lo}, {need_hi}]")]
    GridTooNarrow {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("posterior mean is not increasing near estimate {at}")]
    NonMonotoneRegion { at: f64 },
    #[error("degradation is invertible; every posterior is a point mass")]
    InvertibleDegradation,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("distortion level {requested} is below the minimum {minimum}")]
    InfeasibleDistortion { requested: f64, minimum: f64 },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("linear coefficient a must be nonzero")]
    ZeroA,
    #[error("duplicate record name {0:?}")]
    DuplicateName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}
