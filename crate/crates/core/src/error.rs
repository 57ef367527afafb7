use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid universe [{lo}, {hi}]: lo must be strictly below hi")]
    InvalidUniverse { lo: f64, hi: f64 },

    #[error("invalid membership function ({a}, {b}, {c}): expected a <= b <= c")]
    InvalidMembership { a: f64, b: f64, c: f64 },

    #[error("invalid rule base: {0}")]
    InvalidRuleBase(String),

    #[error("parameter count mismatch: expected {expected}, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("every rule is excluded; the rule base cannot produce an output")]
    EmptyRuleBase,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-positive noise scale sigma = {0}")]
    NonPositiveSigma(f64),

    #[error("label {value} at row {row} is not 0 or 1")]
    InvalidLabel { row: usize, value: f64 },

    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),

    #[error("could not find an initial state inside the prior support after {0} attempts")]
    Initialization(usize),

    #[error("not enough samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("chain has zero variance")]
    DegenerateChain,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
