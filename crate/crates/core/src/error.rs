use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("seed table exhausted: requested {requested}, table holds {available}")]
    SeedTableExhausted { requested: usize, available: usize },

    #[error("class too small to split: class {class} has {count} instance(s)")]
    ClassTooSmall { class: usize, count: usize },

    #[error("series shorter than window: {series_seconds}s < {window_seconds}s")]
    SeriesShorterThanWindow {
        series_seconds: f64,
        window_seconds: f64,
    },

    #[error("non-finite sample")]
    NonFiniteSample,

    #[error("{0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("invalid oracle label {label} for instance {index}")]
    InvalidOracleLabel { index: usize, label: usize },

    #[error("budget {budget} exceeds pool size {pool}")]
    BudgetExceedsPool { budget: usize, pool: usize },

    #[error("mismatched step grids between run records")]
    MismatchedStepGrid,

    #[error("oracle failure: {0}")]
    Oracle(String),
}
