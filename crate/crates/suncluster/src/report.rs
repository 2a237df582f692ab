//! Run report assembly and deterministic emission.
//!
//! Reports serialize bit-identically for identical results: struct fields in
//! fixed order, map keys sorted, floats rounded to 9 significant digits, and
//! infinity sentinels written as the string `"inf"`. Provenance carries input
//! hashes, the seed, and the crate version; never wall-clock time.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::analysis::{ConfusionMatrix, LabeledCalendar, Level, Method, TransitionMatrix};
use crate::clearsky::TurbidityTable;
use crate::cluster::KMeansParams;
use crate::config::{IngestConfig, Level2Config, RunConfig, SeasonConfig};
use crate::features::DayFeatures;
use crate::ingest::{DayRejection, QualityPolicy};
use crate::quality::{QualityScores, QualitySpace};
use crate::seasons::{Season, SeasonCalendar};
use crate::solar::SiteConfig;
use crate::Result;

/// Round to 9 significant digits; identity for zero and non-finite values.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor();
    let factor = 10f64.powf(8.0 - exponent);
    (x * factor).round() / factor
}

/// Fixed report formatting for one float, shared by JSON and CSV outputs.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{}", sig9(x))
    }
}

/// A float rendered at 9 significant digits; infinities as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportFloat(pub f64);

impl Serialize for ReportFloat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(sig9(self.0))
        } else {
            serializer.serialize_str(&format_float(self.0))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    /// Input file name to SHA-256 content hash.
    pub input_files: BTreeMap<String, String>,
}

/// The scientific configuration echoed into the report (paths omitted so
/// identical runs in different directories emit identical bytes).
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub site: SiteConfig,
    pub turbidity: TurbidityTable,
    pub quality: QualityPolicy,
    pub ingest: IngestConfig,
    pub level2: Level2Config,
    pub kmeans: KMeansParams,
    pub seasons: SeasonConfig,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(config: &RunConfig) -> Self {
        Self {
            site: config.site,
            turbidity: config.turbidity.clone(),
            quality: config.quality,
            ingest: config.ingest.clone(),
            level2: config.level2.clone(),
            kmeans: config.kmeans,
            seasons: config.seasons.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoresOut {
    pub silhouette: ReportFloat,
    pub calinski_harabasz: ReportFloat,
    pub davies_bouldin: ReportFloat,
    pub space: QualitySpace,
}

impl From<&QualityScores> for ScoresOut {
    fn from(s: &QualityScores) -> Self {
        Self {
            silhouette: ReportFloat(s.silhouette),
            calinski_harabasz: ReportFloat(s.calinski_harabasz),
            davies_bouldin: ReportFloat(s.davies_bouldin),
            space: s.space,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryOut {
    pub date: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeasonSummary {
    /// Retained-day count per season label.
    pub counts: BTreeMap<String, usize>,
    pub boundaries: Vec<BoundaryOut>,
    pub boundaries_per_year: BTreeMap<i32, usize>,
    /// Same-calendar-date label agreement across years; null for one year.
    pub year_on_year_agreement: Option<ReportFloat>,
    pub scores: ScoresOut,
    pub smoothing_changes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizesOut {
    pub h: usize,
    pub m: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Level2Summary {
    pub scores: ScoresOut,
    pub sizes: SizesOut,
    /// Level label to [min beta, max beta].
    pub beta_ranges: BTreeMap<String, [ReportFloat; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AllSeasonSummary {
    pub scores: ScoresOut,
    pub sizes: SizesOut,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfusionOut {
    /// Rows: beta-reference H/M/L; columns: method H/M/L.
    pub counts: [[u64; 3]; 3],
    pub fractions: [[ReportFloat; 3]; 3],
}

impl From<&ConfusionMatrix> for ConfusionOut {
    fn from(c: &ConfusionMatrix) -> Self {
        Self { counts: c.counts, fractions: c.fractions.map(|row| row.map(ReportFloat)) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionOut {
    pub counts: [[u64; 3]; 3],
    pub probabilities: [[ReportFloat; 3]; 3],
}

impl From<&TransitionMatrix> for TransitionOut {
    fn from(t: &TransitionMatrix) -> Self {
        Self { counts: t.counts, probabilities: t.probabilities.map(|row| row.map(ReportFloat)) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedOut {
    pub date: String,
    pub reason: String,
    pub availability: ReportFloat,
}

/// The self-contained run report.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub config: ConfigEcho,
    pub seasons: SeasonSummary,
    /// Season label -> method -> summary.
    pub level2: BTreeMap<String, BTreeMap<String, Level2Summary>>,
    /// Method -> whole-dataset clustering summary.
    pub all_season: BTreeMap<String, AllSeasonSummary>,
    /// Season label -> method -> confusion against the beta reference.
    pub confusion: BTreeMap<String, BTreeMap<String, ConfusionOut>>,
    /// Season label -> method -> next-day transitions.
    pub transitions: BTreeMap<String, BTreeMap<String, TransitionOut>>,
    pub rejected_days: Vec<RejectedOut>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::Error::Data(format!("report serialization: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}

pub fn rejection_row(rejection: &DayRejection) -> RejectedOut {
    RejectedOut {
        date: rejection.date.to_string(),
        reason: rejection.to_string(),
        availability: ReportFloat(rejection.availability),
    }
}

/// Everything a full pipeline run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub features: Vec<DayFeatures>,
    pub calendar: SeasonCalendar,
    /// Per-method labeled days across all seasons.
    pub labeled: BTreeMap<Method, LabeledCalendar>,
    /// Method -> (season, level) -> 1440-minute mean GHI profile.
    pub mean_profiles: BTreeMap<Method, BTreeMap<(Season, Level), Vec<f64>>>,
    pub rejected: Vec<DayRejection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvBundle,
}

/// Write the report (and, for [`ReportFormat::CsvBundle`], the table CSVs
/// mirroring the report plus the mean-profile, calendar, feature, and
/// rejection exports). Returns the written paths, sorted.
pub fn emit_report(
    artifacts: &RunArtifacts,
    out_dir: &Path,
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let json_path = out_dir.join("report.json");
    std::fs::write(&json_path, artifacts.report.to_json()?)?;
    written.push(json_path);

    if format == ReportFormat::CsvBundle {
        written.push(write_performance_scores(artifacts, out_dir)?);
        written.push(write_beta_ranges_csv(artifacts, out_dir)?);
        written.push(write_confusion_csv(artifacts, out_dir)?);
        written.push(write_transitions_csv(artifacts, out_dir)?);
        written.push(write_season_calendar_csv(&artifacts.calendar, out_dir)?);
        written.push(write_features_csv(&artifacts.features, out_dir)?);
        written.push(write_rejected_csv(&artifacts.rejected, out_dir)?);
        for (method, profiles) in &artifacts.mean_profiles {
            written.push(write_mean_profiles_csv(*method, profiles, out_dir)?);
        }
    }

    written.sort();
    Ok(written)
}

fn write_performance_scores(artifacts: &RunArtifacts, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("performance_scores.csv");
    let mut out = String::from(
        "scope,method,space,silhouette,calinski_harabasz,davies_bouldin,size_h,size_m,size_l\n",
    );
    for (season, methods) in &artifacts.report.level2 {
        for (method, summary) in methods {
            out.push_str(&score_row(season, method, summary.scores.clone(), &summary.sizes));
        }
    }
    for (method, summary) in &artifacts.report.all_season {
        out.push_str(&score_row("all", method, summary.scores.clone(), &summary.sizes));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

fn score_row(scope: &str, method: &str, scores: ScoresOut, sizes: &SizesOut) -> String {
    let space = match scores.space {
        QualitySpace::FeatureSpace => "feature-space",
        QualitySpace::DistanceMatrix => "distance-matrix",
    };
    format!(
        "{scope},{method},{space},{},{},{},{},{},{}\n",
        format_float(scores.silhouette.0),
        format_float(scores.calinski_harabasz.0),
        format_float(scores.davies_bouldin.0),
        sizes.h,
        sizes.m,
        sizes.l
    )
}

fn write_beta_ranges_csv(artifacts: &RunArtifacts, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("beta_ranges.csv");
    let mut out = String::from("season,method,level,beta_min,beta_max\n");
    for (season, methods) in &artifacts.report.level2 {
        for (method, summary) in methods {
            for (level, range) in &summary.beta_ranges {
                out.push_str(&format!(
                    "{season},{method},{level},{},{}\n",
                    format_float(range[0].0),
                    format_float(range[1].0)
                ));
            }
        }
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

fn write_confusion_csv(artifacts: &RunArtifacts, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("confusion.csv");
    let mut out =
        String::from("season,method,ref_level,frac_h,frac_m,frac_l,count_h,count_m,count_l\n");
    for (season, methods) in &artifacts.report.confusion {
        for (method, matrix) in methods {
            for (level, (fractions, counts)) in Level::ALL
                .iter()
                .zip(matrix.fractions.iter().zip(&matrix.counts))
            {
                out.push_str(&format!(
                    "{season},{method},{level},{},{},{},{},{},{}\n",
                    format_float(fractions[0].0),
                    format_float(fractions[1].0),
                    format_float(fractions[2].0),
                    counts[0],
                    counts[1],
                    counts[2]
                ));
            }
        }
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

fn write_transitions_csv(artifacts: &RunArtifacts, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("transitions.csv");
    let mut out =
        String::from("season,method,from_level,p_h,p_m,p_l,count_h,count_m,count_l\n");
    for (season, methods) in &artifacts.report.transitions {
        for (method, matrix) in methods {
            for (level, (row, counts)) in Level::ALL
                .iter()
                .zip(matrix.probabilities.iter().zip(&matrix.counts))
            {
                out.push_str(&format!(
                    "{season},{method},{level},{},{},{},{},{},{}\n",
                    format_float(row[0].0),
                    format_float(row[1].0),
                    format_float(row[2].0),
                    counts[0],
                    counts[1],
                    counts[2]
                ));
            }
        }
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// `date,season` rows for a season calendar.
pub fn write_season_calendar_csv(calendar: &SeasonCalendar, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("season_calendar.csv");
    let mut out = String::from("date,season\n");
    for (date, season) in &calendar.days {
        out.push_str(&format!("{date},{season}\n"));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// Season boundaries plus level-1 scores as a small JSON document.
pub fn write_boundaries_json(calendar: &SeasonCalendar, out_dir: &Path) -> Result<PathBuf> {
    #[derive(Serialize)]
    struct BoundaryReport {
        boundaries: Vec<BoundaryOut>,
        boundaries_per_year: BTreeMap<i32, usize>,
        scores: ScoresOut,
        smoothing_changes: usize,
    }
    let report = BoundaryReport {
        boundaries: calendar
            .boundary_dates
            .iter()
            .map(|(date, from, to)| BoundaryOut {
                date: date.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            })
            .collect(),
        boundaries_per_year: calendar.boundaries_per_year(),
        scores: ScoresOut::from(&calendar.scores),
        smoothing_changes: calendar.smoothing_changes,
    };
    let path = out_dir.join("season_boundaries.json");
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| crate::Error::Data(format!("boundary serialization: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// The feature-table export.
pub fn write_features_csv(features: &[DayFeatures], out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("features.csv");
    let mut out = String::from("date,beta,sunshine_minutes,csi_energy_kwhm2,mean_cloud_cover\n");
    for f in features {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            f.date,
            format_float(f.beta),
            f.sunshine_minutes,
            format_float(f.csi_energy),
            f.mean_cloud_cover.map(format_float).unwrap_or_default()
        ));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// The rejected-day report.
pub fn write_rejected_csv(rejected: &[DayRejection], out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("rejected_days.csv");
    let mut out = String::from("date,reason,availability\n");
    for rejection in rejected {
        out.push_str(&format!(
            "{},\"{}\",{}\n",
            rejection.date,
            rejection,
            format_float(rejection.availability)
        ));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// Per-day labels for every method: `date,season,method,level,beta`.
pub fn write_cluster_labels_csv(
    labeled: &BTreeMap<Method, LabeledCalendar>,
    out_dir: &Path,
) -> Result<PathBuf> {
    let path = out_dir.join("cluster_labels.csv");
    let mut out = String::from("date,season,method,level,beta\n");
    for (method, calendar) in labeled {
        for day in &calendar.days {
            out.push_str(&format!(
                "{},{},{method},{},{}\n",
                day.date,
                day.season,
                day.level,
                format_float(day.beta)
            ));
        }
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

fn write_mean_profiles_csv(
    method: Method,
    profiles: &BTreeMap<(Season, Level), Vec<f64>>,
    out_dir: &Path,
) -> Result<PathBuf> {
    let path = out_dir.join(format!("mean_profiles_{method}.csv"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    let combos: Vec<(Season, Level)> = Season::ALL
        .iter()
        .flat_map(|&s| Level::ALL.iter().map(move |&l| (s, l)))
        .collect();
    write!(file, "minute")?;
    for (season, level) in &combos {
        write!(file, ",{season}-{level}")?;
    }
    writeln!(file)?;
    for minute in 0..crate::MINUTES_PER_DAY {
        write!(file, "{minute}")?;
        for combo in &combos {
            match profiles.get(combo) {
                Some(profile) => write!(file, ",{}", format_float(profile[minute]))?,
                None => write!(file, ",")?,
            }
        }
        writeln!(file)?;
    }
    file.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_rounds_to_nine_significant_digits() {
        assert_eq!(sig9(0.0), 0.0);
        assert_eq!(sig9(200.0), 200.0);
        assert_eq!(sig9(0.123456789123), 0.123456789);
        assert_eq!(sig9(98765.43211234), 98765.4321);
        assert_eq!(sig9(-0.000123456789456), -0.000123456789);
        assert!(sig9(f64::INFINITY).is_infinite());
    }

    #[test]
    fn format_float_sentinels() {
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_float(0.899749373), "0.899749373");
    }

    #[test]
    fn report_float_serializes_inf_as_string() {
        let json = serde_json::to_string(&ReportFloat(f64::INFINITY)).unwrap();
        assert_eq!(json, "\"inf\"");
        let json = serde_json::to_string(&ReportFloat(0.5)).unwrap();
        assert_eq!(json, "0.5");
    }
}
