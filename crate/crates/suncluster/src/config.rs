//! Run configuration: a single TOML document, fully defaulted, with unknown
//! keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Method;
use crate::clearsky::TurbidityTable;
use crate::cluster::KMeansParams;
use crate::ingest::{CsvFormat, QualityPolicy};
use crate::solar::{SiteConfig, GOLDEN, HAWAII};
use crate::{Error, Result};

impl Default for SiteConfig {
    fn default() -> Self {
        GOLDEN
    }
}

impl Default for TurbidityTable {
    fn default() -> Self {
        TurbidityTable::uniform(3.0).expect("3.0 is a valid turbidity")
    }
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            ghi_column: "ghi".into(),
            cloud_column: None,
        }
    }
}

/// Input column mapping plus feature knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub timestamp_column: String,
    pub ghi_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cloud_column: Option<String>,
    /// Clear-sky GHI threshold (W/m²) for sunshine-duration counting.
    pub sunshine_threshold: f64,
}

impl IngestConfig {
    pub fn columns(&self) -> CsvFormat {
        CsvFormat {
            timestamp_column: self.timestamp_column.clone(),
            ghi_column: self.ghi_column.clone(),
            cloud_column: self.cloud_column.clone(),
        }
    }
}

impl Default for IngestConfig {
    fn default() -> Self {
        let columns = CsvFormat::default();
        Self {
            timestamp_column: columns.timestamp_column,
            ghi_column: columns.ghi_column,
            cloud_column: columns.cloud_column,
            sunshine_threshold: 0.0,
        }
    }
}

/// Level-2 method selection and time-series preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Level2Config {
    pub methods: Vec<Method>,
    /// Daytime resampling length for DTW profiles.
    pub dtw_points: usize,
    /// Sakoe-Chiba half-width in samples; unbounded when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtw_band: Option<usize>,
}

impl Default for Level2Config {
    fn default() -> Self {
        Self {
            methods: vec![Method::Beta, Method::Ed, Method::Dtw],
            dtw_points: 80,
            dtw_band: None,
        }
    }
}

/// Season-identification knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeasonConfig {
    /// Centered majority-vote width (odd); off by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing_window: Option<usize>,
    /// Minimum day count for season identification.
    pub min_days: usize,
}

impl Default for SeasonConfig {
    fn default() -> Self {
        Self { smoothing_window: None, min_days: 365 }
    }
}

/// Where inputs, outputs, and the distance-matrix cache live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub input_dir: PathBuf,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            cache_dir: None,
        }
    }
}

/// Public measurement-station download endpoints; templates because the
/// station URL patterns drift over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchConfig {
    /// URL with `{year}` and `{month}` placeholders, one file per month.
    pub url_template: String,
    /// First month, `YYYY-MM`.
    pub start: String,
    /// Last month inclusive, `YYYY-MM`.
    pub end: String,
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub site: SiteConfig,
    pub turbidity: TurbidityTable,
    pub quality: QualityPolicy,
    pub ingest: IngestConfig,
    pub level2: Level2Config,
    pub kmeans: KMeansParams,
    pub seasons: SeasonConfig,
    pub io: IoConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fetch: Option<FetchConfig>,
}

/// Calibrated monthly turbidity for the Golden preset.
pub const GOLDEN_TURBIDITY: [f64; 12] = [
    3.12, 3.23, 3.55, 3.98, 4.40, 4.72, 4.83, 4.72, 4.40, 3.98, 3.55, 3.23,
];

/// Calibrated monthly turbidity for the Hawaii preset.
pub const HAWAII_TURBIDITY: [f64; 12] = [
    4.26, 4.24, 4.20, 4.14, 4.09, 4.05, 4.03, 4.05, 4.09, 4.14, 4.20, 4.24,
];

impl RunConfig {
    /// Golden, Colorado preset: site, calibrated turbidity, and the BMS
    /// column names.
    pub fn golden() -> Self {
        Self {
            site: GOLDEN,
            turbidity: TurbidityTable::new(GOLDEN_TURBIDITY).unwrap(),
            ingest: IngestConfig {
                cloud_column: Some("cloud_cover".into()),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    /// Kailua-Kona, Hawaii preset (no cloud channel).
    pub fn hawaii() -> Self {
        Self {
            site: HAWAII,
            turbidity: TurbidityTable::new(HAWAII_TURBIDITY).unwrap(),
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.site.validate()?;
        self.quality.validate()?;
        for &tl in self.turbidity.monthly() {
            if !(1.0..=10.0).contains(&tl) {
                return Err(Error::InvalidTurbidity(tl));
            }
        }
        if self.level2.dtw_points < 2 {
            return Err(Error::Config(format!(
                "dtw_points {} must be at least 2",
                self.level2.dtw_points
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.level2.methods {
            if !seen.insert(*m) {
                return Err(Error::Config(format!("duplicate method {m}")));
            }
        }
        if let Some(w) = self.seasons.smoothing_window {
            if w % 2 == 0 {
                return Err(Error::Config(format!("smoothing_window {w} must be odd")));
            }
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(Error::Config("kmeans restarts and max_iter must be positive".into()));
        }
        if !self.kmeans.tol.is_finite() || self.kmeans.tol <= 0.0 {
            return Err(Error::Config(format!("kmeans tol {} must be positive", self.kmeans.tol)));
        }
        if self.seasons.min_days < 3 {
            return Err(Error::Config("seasons min_days must be at least 3".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_fully_defaulted() {
        let config = RunConfig::from_toml_str("").unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.quality.min_availability, 0.9);
        assert_eq!(config.level2.dtw_points, 80);
        assert_eq!(config.kmeans.restarts, 10);
        assert_eq!(config.seasons.min_days, 365);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("frobnicate = 3\n").is_err());
        assert!(RunConfig::from_toml_str("[level2]\nbogus = 1\n").is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        for config in [RunConfig::default(), RunConfig::golden(), RunConfig::hawaii()] {
            let text = config.to_toml_string().unwrap();
            let parsed = RunConfig::from_toml_str(&text).unwrap();
            assert_eq!(parsed, config);
            let text2 = parsed.to_toml_string().unwrap();
            assert_eq!(text, text2);
        }
    }

    #[test]
    fn partial_document_overrides_defaults() {
        let text = "[kmeans]\nseed = 7\n\n[level2]\nmethods = [\"beta\"]\n";
        let config = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(config.kmeans.seed, 7);
        assert_eq!(config.level2.methods, vec![Method::Beta]);
        assert_eq!(config.quality.min_availability, 0.9);
    }

    #[test]
    fn validation_catches_bad_values() {
        assert!(RunConfig::from_toml_str("[site]\nlatitude = 99.0\n").is_err());
        assert!(RunConfig::from_toml_str("[level2]\ndtw_points = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[seasons]\nsmoothing_window = 4\n").is_err());
        assert!(
            RunConfig::from_toml_str("[level2]\nmethods = [\"beta\", \"beta\"]\n").is_err()
        );
        assert!(RunConfig::from_toml_str("turbidity = [0.1,3,3,3,3,3,3,3,3,3,3,3]\n").is_err());
    }

    #[test]
    fn presets_differ_in_site_and_turbidity() {
        let golden = RunConfig::golden();
        let hawaii = RunConfig::hawaii();
        assert_eq!(golden.site.latitude, 39.74);
        assert_eq!(hawaii.site.latitude, 19.72);
        assert!(golden.ingest.cloud_column.is_some());
        assert!(hawaii.ingest.cloud_column.is_none());
        assert_ne!(golden.turbidity, hawaii.turbidity);
    }
}
