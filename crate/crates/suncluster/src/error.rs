//! Crate error type.

use chrono::NaiveDate;

/// Errors raised by the library. Day-quality rejections are not errors; see
/// [`crate::ingest::DayRejection`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("csv format error: {message}")]
    CsvFormat { message: String },

    #[error("line {line}: unparseable timestamp {value:?}")]
    Timestamp { line: usize, value: String },

    #[error("date {0} outside the supported 1950-2100 range")]
    DateOutOfRange(NaiveDate),

    #[error("invalid site configuration: {0}")]
    InvalidSite(String),

    #[error("Linke turbidity {0} outside [1, 10]")]
    InvalidTurbidity(f64),

    #[error("clear-sky energy is zero on {0}; beta is undefined")]
    ZeroClearSkyEnergy(NaiveDate),

    #[error("no clear-sky day paired with {0}")]
    DatePairing(NaiveDate),

    #[error("profile lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("band half-width {band} infeasible for length difference {diff}")]
    InfeasibleBand { band: usize, diff: usize },

    #[error("no daylight on {0}; daytime resampling undefined")]
    NoDaylight(NaiveDate),

    #[error("resampling to {0} points requires at least 2")]
    TooFewPoints(usize),

    #[error("cannot form {k} clusters from {n} items")]
    InvalidClusterCount { k: usize, n: usize },

    #[error("non-finite value in clustering input")]
    NonFiniteInput,

    #[error("score undefined for fewer than 2 clusters")]
    SingleCluster,

    #[error("labels and data disagree: {0}")]
    LabelMismatch(String),

    #[error("{got} days of features; season identification needs at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("day sets differ between labelings")]
    DaySetMismatch,

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("distance matrix cache entry is invalid: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
