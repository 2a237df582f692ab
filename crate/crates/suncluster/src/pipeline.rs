//! End-to-end orchestration: raw CSV directory in, deterministic report out.
//!
//! Stages: load and segment minute CSVs, compute per-date clear-sky days,
//! clean and reduce to features, identify seasons from clear-sky features,
//! run the three level-2 methods per season and over the whole dataset,
//! then assemble analysis artifacts and the report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::analysis::{
    assign_levels, beta_ranges, confusion, mean_profiles, transitions, LabeledCalendar,
    LabeledDay, Level, Method,
};
use crate::clearsky::{clearsky_day, ClearSkyDay};
use crate::cluster::{kmeans, kmedoids, ClusterAssignment};
use crate::config::RunConfig;
use crate::distance::{
    pairwise_matrix, resample_profile, DistanceMatrix, MetricTag, ProfileVector, ResampleMode,
};
use crate::features::{feature_table, DayFeatures};
use crate::ingest::{parse_raw_csv, segment_days, CsvFormat, DayRecord};
use crate::quality::{
    calinski_harabasz, davies_bouldin, silhouette, silhouette_points, QualityScores, QualitySpace,
};
use crate::report::{
    rejection_row, AllSeasonSummary, BoundaryOut, ConfigEcho, ConfusionOut, Level2Summary,
    Provenance, ReportFloat, RunArtifacts, RunReport, ScoresOut, SeasonSummary, SizesOut,
    TransitionOut, SCHEMA_VERSION,
};
use crate::seasons::{identify_seasons_with_min, Season, SeasonCalendar};
use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Read every `*.csv` under `input_dir` (sorted by name), parse, and segment
/// into day records. Returns the days and per-file content hashes.
pub fn load_days(
    input_dir: &Path,
    format: &CsvFormat,
) -> Result<(Vec<DayRecord>, BTreeMap<String, String>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(input_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("no csv files in {}", input_dir.display())));
    }
    let mut samples = Vec::new();
    let mut hashes = BTreeMap::new();
    for file in &files {
        let bytes = std::fs::read(file)?;
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        hashes.insert(name, sha256_hex(&bytes));
        samples.extend(parse_raw_csv(bytes.as_slice(), format)?);
    }
    Ok((segment_days(&samples), hashes))
}

/// Clear-sky days for a date list, evaluated in parallel, order preserved.
pub fn clearsky_days(dates: &[NaiveDate], config: &RunConfig) -> Result<Vec<ClearSkyDay>> {
    dates
        .par_iter()
        .map(|&date| clearsky_day(date, &config.site, &config.turbidity))
        .collect()
}

/// One level-2 clustering outcome for a day subset.
#[derive(Debug, Clone)]
pub struct Level2Run {
    pub method: Method,
    pub assignment: ClusterAssignment,
    pub scores: QualityScores,
    pub levels: Vec<Level>,
}

impl Level2Run {
    pub fn sizes(&self) -> SizesOut {
        let mut sizes = SizesOut { h: 0, m: 0, l: 0 };
        for level in &self.levels {
            match level {
                Level::H => sizes.h += 1,
                Level::M => sizes.m += 1,
                Level::L => sizes.l += 1,
            }
        }
        sizes
    }
}

/// Cluster one day subset (a season, or everything for the all-season run)
/// with one method and score it.
///
/// beta: k-means on the 1-D beta column, scored in that feature space.
/// ed: PAM on the Euclidean matrix of full-grid profiles.
/// dtw: PAM on the DTW matrix of daytime-resampled profiles (cached when a
/// cache directory is configured). For the time-series methods the
/// silhouette uses the method's own distance matrix while CH/DB are
/// computed on the full-grid vectors.
pub fn run_level2(
    days: &[&DayRecord],
    features: &[&DayFeatures],
    method: Method,
    config: &RunConfig,
) -> Result<Level2Run> {
    if days.len() < 3 {
        return Err(Error::InvalidClusterCount { k: 3, n: days.len() });
    }
    let betas: Vec<f64> = features.iter().map(|f| f.beta).collect();
    let dates: Vec<NaiveDate> = features.iter().map(|f| f.date).collect();

    let (assignment, scores) = match method {
        Method::Beta => {
            let points: Vec<Vec<f64>> = betas.iter().map(|&b| vec![b]).collect();
            let assignment = kmeans(&points, 3, &config.kmeans)?;
            let scores = QualityScores {
                silhouette: silhouette_points(&points, &assignment.labels)?,
                calinski_harabasz: calinski_harabasz(&points, &assignment.labels)?,
                davies_bouldin: davies_bouldin(&points, &assignment.labels)?,
                space: QualitySpace::FeatureSpace,
            };
            (assignment, scores)
        }
        Method::Ed => {
            let profiles = full_grid_profiles(days)?;
            let matrix = pairwise_matrix(&profiles, &dates, MetricTag::Euclidean, None)?;
            let assignment = kmedoids(&matrix, 3, config.kmeans.seed, config.kmeans.max_iter)?;
            let scores = timeseries_scores(&assignment, &matrix, &profiles)?;
            (assignment, scores)
        }
        Method::Dtw => {
            let matrix = dtw_matrix(days, &dates, config)?;
            let assignment = kmedoids(&matrix, 3, config.kmeans.seed, config.kmeans.max_iter)?;
            let full = full_grid_profiles(days)?;
            let scores = timeseries_scores(&assignment, &matrix, &full)?;
            (assignment, scores)
        }
    };
    let levels = assign_levels(&assignment, &betas)?;
    Ok(Level2Run { method, assignment, scores, levels })
}

fn full_grid_profiles(days: &[&DayRecord]) -> Result<Vec<ProfileVector>> {
    days.iter().map(|d| resample_profile(d, ResampleMode::FullGrid)).collect()
}

/// Silhouette from the method's own matrix; CH/DB in the full-grid vector
/// space (centroids need a vector space, which DTW does not have).
fn timeseries_scores(
    assignment: &ClusterAssignment,
    matrix: &DistanceMatrix,
    full_grid: &[ProfileVector],
) -> Result<QualityScores> {
    let points: Vec<Vec<f64>> = full_grid.iter().map(|p| p.values.clone()).collect();
    Ok(QualityScores {
        silhouette: silhouette(&assignment.labels, matrix)?,
        calinski_harabasz: calinski_harabasz(&points, &assignment.labels)?,
        davies_bouldin: davies_bouldin(&points, &assignment.labels)?,
        space: QualitySpace::DistanceMatrix,
    })
}

/// The DTW matrix for a day subset, through the on-disk cache when enabled.
fn dtw_matrix(
    days: &[&DayRecord],
    dates: &[NaiveDate],
    config: &RunConfig,
) -> Result<DistanceMatrix> {
    let points = config.level2.dtw_points;
    let band = config.level2.dtw_band;
    let profiles: Vec<ProfileVector> = days
        .iter()
        .map(|d| resample_profile(d, ResampleMode::Daytime { points }))
        .collect::<Result<_>>()?;
    let policy_id = format!("daytime-{points}");

    if let Some(cache_dir) = &config.io.cache_dir {
        let key = DistanceMatrix::cache_key(MetricTag::Dtw, &policy_id, band, dates);
        let path = cache_dir.join(format!("dtw-{key}.csv"));
        if path.exists() {
            log::info!("dtw matrix cache hit: {}", path.display());
            return DistanceMatrix::load_csv(&path, MetricTag::Dtw);
        }
        let matrix = pairwise_matrix(&profiles, dates, MetricTag::Dtw, band)?;
        std::fs::create_dir_all(cache_dir)?;
        matrix.save_csv(&path)?;
        return Ok(matrix);
    }
    pairwise_matrix(&profiles, dates, MetricTag::Dtw, band)
}

/// Ingested, cleaned, feature-reduced input: the shared base of every stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub table: crate::features::FeatureTable,
    pub input_files: BTreeMap<String, String>,
}

/// Ingest the input directory, compute clear-sky days, clean, and reduce to
/// features.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let (day_records, input_files) = load_days(&config.io.input_dir, &config.ingest.columns())?;
    let dates: Vec<NaiveDate> = day_records.iter().map(|d| d.date).collect();
    let clearsky = clearsky_days(&dates, config)?;
    let table = feature_table(
        &day_records,
        &clearsky,
        &config.quality,
        config.ingest.sunshine_threshold,
    )?;
    if table.features.is_empty() {
        return Err(Error::Data("every day was rejected by the quality gate".into()));
    }
    Ok(Prepared { table, input_files })
}

/// Level-1 season identification over prepared features.
pub fn identify(prepared: &Prepared, config: &RunConfig) -> Result<SeasonCalendar> {
    identify_seasons_with_min(
        &prepared.table.features,
        &config.kmeans,
        config.seasons.smoothing_window,
        config.seasons.min_days,
    )
}

/// Per-season level-2 runs for every configured method, plus the merged
/// per-method labeled calendars.
pub type SeasonRuns = BTreeMap<Season, BTreeMap<Method, Level2Run>>;

pub fn run_level2_all(
    prepared: &Prepared,
    calendar: &SeasonCalendar,
    config: &RunConfig,
) -> Result<(SeasonRuns, BTreeMap<Method, LabeledCalendar>)> {
    let table = &prepared.table;
    let index_of: BTreeMap<NaiveDate, usize> = table
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.date, i))
        .collect();
    let mut season_indices: BTreeMap<Season, Vec<usize>> = BTreeMap::new();
    for (date, season) in &calendar.days {
        season_indices.entry(*season).or_default().push(index_of[date]);
    }

    let mut level2_runs: SeasonRuns = BTreeMap::new();
    for (&season, indices) in &season_indices {
        let days: Vec<&DayRecord> = indices.iter().map(|&i| &table.days[i]).collect();
        let features: Vec<&DayFeatures> = indices.iter().map(|&i| &table.features[i]).collect();
        for &method in &config.level2.methods {
            let run = run_level2(&days, &features, method, config)?;
            level2_runs.entry(season).or_default().insert(method, run);
        }
    }

    let mut labeled: BTreeMap<Method, LabeledCalendar> = BTreeMap::new();
    for &method in &config.level2.methods {
        let mut days: Vec<LabeledDay> = Vec::with_capacity(table.features.len());
        for (&season, indices) in &season_indices {
            let run = &level2_runs[&season][&method];
            for (pos, &i) in indices.iter().enumerate() {
                days.push(LabeledDay {
                    date: table.features[i].date,
                    season,
                    level: run.levels[pos],
                    beta: table.features[i].beta,
                });
            }
        }
        days.sort_by_key(|d| d.date);
        labeled.insert(method, LabeledCalendar { method, days });
    }
    Ok((level2_runs, labeled))
}

/// The full pipeline: ingest, clear sky, features, seasons, level-2 runs,
/// all-season runs, analysis artifacts, report.
pub fn run_full(config: &RunConfig) -> Result<RunArtifacts> {
    let prepared = prepare(config)?;
    let calendar = identify(&prepared, config)?;
    let (level2_runs, labeled) = run_level2_all(&prepared, &calendar, config)?;
    let table = &prepared.table;
    let index_of: BTreeMap<NaiveDate, usize> = table
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.date, i))
        .collect();

    // mean GHI profiles per method and (season, level)
    let mut profiles: BTreeMap<Method, BTreeMap<(Season, Level), Vec<f64>>> = BTreeMap::new();
    for (&method, calendar_m) in &labeled {
        let mut groups: BTreeMap<(Season, Level), Vec<&DayRecord>> = BTreeMap::new();
        for day in &calendar_m.days {
            groups
                .entry((day.season, day.level))
                .or_default()
                .push(&table.days[index_of[&day.date]]);
        }
        let method_profiles = groups
            .into_iter()
            .map(|(key, members)| (key, mean_profiles(&members)))
            .collect();
        profiles.insert(method, method_profiles);
    }

    // all-season (direct) clustering per method
    let all_days: Vec<&DayRecord> = table.days.iter().collect();
    let all_features: Vec<&DayFeatures> = table.features.iter().collect();
    let mut all_season_runs: BTreeMap<Method, Level2Run> = BTreeMap::new();
    for &method in &config.level2.methods {
        all_season_runs.insert(method, run_level2(&all_days, &all_features, method, config)?);
    }

    let report = assemble_report(
        config,
        prepared.input_files.clone(),
        &calendar,
        &level2_runs,
        &all_season_runs,
        &labeled,
        &table.rejected,
    )?;

    Ok(RunArtifacts {
        report,
        features: prepared.table.features,
        calendar,
        labeled,
        mean_profiles: profiles,
        rejected: prepared.table.rejected,
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    config: &RunConfig,
    input_files: BTreeMap<String, String>,
    calendar: &SeasonCalendar,
    level2_runs: &BTreeMap<Season, BTreeMap<Method, Level2Run>>,
    all_season_runs: &BTreeMap<Method, Level2Run>,
    labeled: &BTreeMap<Method, LabeledCalendar>,
    rejected: &[crate::ingest::DayRejection],
) -> Result<RunReport> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, season) in &calendar.days {
        *counts.entry(season.to_string()).or_insert(0) += 1;
    }
    let seasons = SeasonSummary {
        counts,
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
        year_on_year_agreement: calendar.year_on_year_agreement().map(ReportFloat),
        scores: ScoresOut::from(&calendar.scores),
        smoothing_changes: calendar.smoothing_changes,
    };

    let mut level2 = BTreeMap::new();
    for (season, methods) in level2_runs {
        let mut by_method = BTreeMap::new();
        for (method, run) in methods {
            let ranges = beta_ranges(&labeled[method]);
            let mut range_out = BTreeMap::new();
            for level in Level::ALL {
                if let Some(&(lo, hi)) = ranges.get(&(*season, level)) {
                    range_out
                        .insert(level.to_string(), [ReportFloat(lo), ReportFloat(hi)]);
                }
            }
            by_method.insert(
                method.to_string(),
                Level2Summary {
                    scores: ScoresOut::from(&run.scores),
                    sizes: run.sizes(),
                    beta_ranges: range_out,
                },
            );
        }
        level2.insert(season.to_string(), by_method);
    }

    let mut all_season = BTreeMap::new();
    for (method, run) in all_season_runs {
        all_season.insert(
            method.to_string(),
            AllSeasonSummary { scores: ScoresOut::from(&run.scores), sizes: run.sizes() },
        );
    }

    let mut confusion_out: BTreeMap<String, BTreeMap<String, ConfusionOut>> = BTreeMap::new();
    if let Some(reference) = labeled.get(&Method::Beta) {
        for (&method, calendar_m) in labeled {
            if method == Method::Beta {
                continue;
            }
            for &season in Season::ALL.iter() {
                let ref_subset = season_subset(reference, season);
                let method_subset = season_subset(calendar_m, season);
                if ref_subset.days.is_empty() {
                    continue;
                }
                let matrix = confusion(&ref_subset, &method_subset)?;
                confusion_out
                    .entry(season.to_string())
                    .or_default()
                    .insert(method.to_string(), ConfusionOut::from(&matrix));
            }
        }
    }

    let mut transitions_out: BTreeMap<String, BTreeMap<String, TransitionOut>> = BTreeMap::new();
    for (&method, calendar_m) in labeled {
        for &season in Season::ALL.iter() {
            let matrix = transitions(calendar_m, season);
            if matrix.counts.iter().flatten().sum::<u64>() == 0 {
                continue;
            }
            transitions_out
                .entry(season.to_string())
                .or_default()
                .insert(method.to_string(), TransitionOut::from(&matrix));
        }
    }

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.kmeans.seed,
            input_files,
        },
        config: ConfigEcho::from(config),
        seasons,
        level2,
        all_season,
        confusion: confusion_out,
        transitions: transitions_out,
        rejected_days: rejected.iter().map(rejection_row).collect(),
    })
}

fn season_subset(calendar: &LabeledCalendar, season: Season) -> LabeledCalendar {
    LabeledCalendar {
        method: calendar.method,
        days: calendar.days.iter().filter(|d| d.season == season).copied().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_csv, SyntheticSpec};

    fn fixture_config(dir: &Path) -> RunConfig {
        let mut config = RunConfig::golden();
        config.io.input_dir = dir.join("data");
        config.io.out_dir = dir.join("out");
        config.seasons.min_days = 30;
        config
    }

    fn write_fixture(dir: &Path, n_days: usize) {
        let spec = SyntheticSpec::new(
            crate::solar::GOLDEN,
            NaiveDate::from_ymd_opt(2017, 4, 1).unwrap(),
            n_days,
            42,
        );
        let csv = generate_csv(&spec).unwrap();
        std::fs::create_dir_all(dir.join("data")).unwrap();
        std::fs::write(dir.join("data").join("synthetic.csv"), csv).unwrap();
    }

    #[test]
    fn full_pipeline_on_synthetic_fixture() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), 60);
        let config = fixture_config(dir.path());
        let artifacts = run_full(&config).unwrap();

        // one day is synthesized sparse and must be rejected
        assert_eq!(artifacts.rejected.len(), 1);
        assert_eq!(artifacts.features.len(), 59);
        assert_eq!(artifacts.calendar.days.len(), 59);
        assert_eq!(artifacts.labeled.len(), 3);

        // every method labels every retained day
        for calendar in artifacts.labeled.values() {
            assert_eq!(calendar.days.len(), 59);
        }

        // report sections reflect the configured methods
        assert_eq!(artifacts.report.all_season.len(), 3);
        for methods in artifacts.report.level2.values() {
            assert_eq!(methods.len(), 3);
        }
        // confusion only for the time-series methods
        for methods in artifacts.report.confusion.values() {
            assert!(methods.contains_key("ed"));
            assert!(methods.contains_key("dtw"));
            assert!(!methods.contains_key("beta"));
        }
    }

    #[test]
    fn beta_method_alone_gives_seasons_only_report() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), 40);
        let mut config = fixture_config(dir.path());
        config.level2.methods = vec![];
        let artifacts = run_full(&config).unwrap();
        assert!(artifacts.report.level2.values().all(|m| m.is_empty()));
        assert!(artifacts.report.all_season.is_empty());
        assert!(artifacts.report.confusion.is_empty());
        assert!(artifacts.report.transitions.is_empty());
        assert!(!artifacts.calendar.days.is_empty());
    }

    #[test]
    fn warm_dtw_cache_reproduces_cold_run() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), 40);
        let mut config = fixture_config(dir.path());
        config.io.cache_dir = Some(dir.path().join("cache"));

        let cold = run_full(&config).unwrap();
        assert!(std::fs::read_dir(dir.path().join("cache")).unwrap().count() > 0);
        let warm = run_full(&config).unwrap();
        assert_eq!(cold.report.to_json().unwrap(), warm.report.to_json().unwrap());
    }

    #[test]
    fn missing_input_dir_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = fixture_config(dir.path());
        assert!(run_full(&config).is_err());
    }

    #[test]
    fn three_day_beta_run_gives_one_day_per_level() {
        // k = n: each day its own cluster, levels follow the beta ordering
        let base: Vec<f64> = (0..crate::MINUTES_PER_DAY)
            .map(|m| {
                let x = (m as f64 - 720.0) / 300.0;
                (800.0 * (1.0 - x * x)).max(0.0)
            })
            .collect();
        let betas = [0.9, 0.6, 0.2];
        let date0 = NaiveDate::from_ymd_opt(2017, 6, 1).unwrap();
        let days: Vec<DayRecord> = betas
            .iter()
            .enumerate()
            .map(|(i, &b)| DayRecord {
                date: date0 + chrono::Duration::days(i as i64),
                ghi: base.iter().map(|v| Some(v * b)).collect(),
                cloud_cover: None,
                ghi_availability: 1.0,
                cloud_availability: None,
            })
            .collect();
        let features: Vec<DayFeatures> = days
            .iter()
            .zip(&betas)
            .map(|(d, &b)| DayFeatures {
                date: d.date,
                beta: b,
                sunshine_minutes: 600,
                csi_energy: 6.0,
                mean_cloud_cover: None,
            })
            .collect();
        let day_refs: Vec<&DayRecord> = days.iter().collect();
        let feature_refs: Vec<&DayFeatures> = features.iter().collect();
        let run = run_level2(&day_refs, &feature_refs, Method::Beta, &RunConfig::default())
            .unwrap();
        assert_eq!(run.levels, vec![Level::H, Level::M, Level::L]);
        let sizes = run.sizes();
        assert_eq!((sizes.h, sizes.m, sizes.l), (1, 1, 1));

        // fewer than k days is a domain error
        let err =
            run_level2(&day_refs[..2], &feature_refs[..2], Method::Beta, &RunConfig::default());
        assert!(matches!(err, Err(Error::InvalidClusterCount { .. })));
    }

    /// Spearman rank correlation with average ranks for ties.
    fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
        fn ranks(values: &[f64]) -> Vec<f64> {
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            let mut out = vec![0.0; values.len()];
            let mut i = 0;
            while i < order.len() {
                let mut j = i;
                while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
                    j += 1;
                }
                let rank = (i + j) as f64 / 2.0 + 1.0;
                for &idx in &order[i..=j] {
                    out[idx] = rank;
                }
                i = j + 1;
            }
            out
        }
        let rx = ranks(xs);
        let ry = ranks(ys);
        let n = xs.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
        cov / (vx.sqrt() * vy.sqrt())
    }

    #[test]
    fn beta_anticorrelates_with_cloud_cover() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), 60);
        let config = fixture_config(dir.path());
        let prepared = prepare(&config).unwrap();
        let pairs: Vec<(f64, f64)> = prepared
            .table
            .features
            .iter()
            .filter_map(|f| f.mean_cloud_cover.map(|cc| (f.beta, cc)))
            .collect();
        assert!(pairs.len() > 50);
        let betas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let clouds: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let rho = spearman(&betas, &clouds);
        assert!(rho < -0.5, "spearman rho = {rho}");
    }
}
