//! Two-level clustering of daily solar irradiance.
//!
//! Level 1 identifies contiguous seasons from clear-sky features alone
//! (sunshine duration and daily clear-sky energy). Level 2 clusters the days
//! of each season into High/Medium/Low irradiance levels by three competing
//! methods: the daily irradiance index (beta = measured energy over clear-sky
//! energy), Euclidean distance between full-day profiles, and dynamic time
//! warping between daytime-resampled profiles. The crate also scores every
//! clustering (Silhouette, Calinski-Harabasz, Davies-Bouldin), compares the
//! time-series methods to the beta reference via confusion matrices, and
//! derives day-to-day level transition probabilities per season.
//!
//! The [`pipeline`] module orchestrates the whole run from raw minute CSV
//! files to a deterministic [`report::RunReport`].

pub mod analysis;
pub mod clearsky;
pub mod cluster;
pub mod config;
pub mod distance;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod quality;
pub mod report;
pub mod seasons;
pub mod solar;
pub mod synthetic;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Minutes in a civil day; every per-day sequence in the crate has this length.
pub const MINUTES_PER_DAY: usize = 1440;
