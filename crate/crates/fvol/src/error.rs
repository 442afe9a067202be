//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FvolError {
    #[error("length mismatch: expected {expected}, got {got}")]
    MismatchedLength { expected: usize, got: usize },
    #[error("operation requires a uniform grid")]
    NonUniformGrid,
    #[error("grid too short: need more than {need} points, have {have}")]
    GridTooShort { need: usize, have: usize },
    #[error("price at index {index} is not strictly positive")]
    NonPositivePrice { index: usize },
    #[error("series too short: need at least {need} elements")]
    TooShort { need: usize },
    #[error("kernel derivative evaluated outside [0,1]: u = {u}")]
    OutOfSupport { u: f64 },
    #[error("curves live on different grids")]
    MismatchedGrid,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("requested {k} components but the grid has only {max} points")]
    KTooLarge { k: usize, max: usize },
    #[error("no neighbors with positive kernel weight{}", context_suffix(.context))]
    NoNeighbors { context: Option<String> },
    #[error("complete mode requires a fully observed dataset")]
    CompleteModeOnIncompleteData,
    #[error("no fitted value available at observation {index}")]
    MissingFittedValue { index: usize },
    #[error("variance fit at observation {index} is below the floor {floor}")]
    DegenerateVarianceAtObservation { index: usize, floor: f64 },
    #[error("empirical small-ball probability at the bandwidth is zero")]
    EmptyBall,
    #[error("confidence-interval plug-in `{name}` must be positive, got {value}")]
    NonPositivePlugin { name: &'static str, value: f64 },
    #[error("all off-diagonal distances are zero; cannot build a bandwidth grid")]
    AllDistancesZero,
    #[error("every bandwidth candidate was infeasible")]
    NoFeasibleCandidate,
    #[error("denominator is zero in `{0}`")]
    ZeroDenominator(&'static str),
    #[error("no records to aggregate")]
    EmptyRecords,
    #[error("empty series")]
    EmptySeries,
    #[error("schema error in {file} at line {line}: {message}")]
    SchemaError {
        file: String,
        line: usize,
        message: String,
    },
    #[error("hourly and daily files share no calendar dates")]
    NoOverlappingDates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, FvolError>;
