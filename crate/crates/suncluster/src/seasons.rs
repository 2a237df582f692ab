//! Level-1 clustering: winter/transition/summer season identification from
//! clear-sky features only (sunshine duration and daily clear-sky energy).

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, Centers, KMeansParams};
use crate::features::DayFeatures;
use crate::quality::{
    calinski_harabasz, davies_bouldin, silhouette_points, QualityScores, QualitySpace,
};
use crate::{Error, Result};

/// Season label; the single transition cluster covers both shoulder windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Season {
    W,
    T,
    S,
}

impl Season {
    pub const ALL: [Season; 3] = [Season::W, Season::T, Season::S];
}

impl std::fmt::Display for Season {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Season::W => "W",
            Season::T => "T",
            Season::S => "S",
        })
    }
}

/// Per-day season labels with boundary and quality metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonCalendar {
    /// (date, label) for every retained day, ascending by date.
    pub days: Vec<(NaiveDate, Season)>,
    /// Label changes between consecutive retained days: (date, from, to).
    pub boundary_dates: Vec<(NaiveDate, Season, Season)>,
    /// Scores on the standardized feature space with the raw k-means labels.
    pub scores: QualityScores,
    /// Days whose label the majority-vote smoothing changed (0 when off).
    pub smoothing_changes: usize,
}

impl SeasonCalendar {
    pub fn season_of(&self, date: NaiveDate) -> Option<Season> {
        self.days
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.days[i].1)
    }

    /// Boundary count per calendar year, for the contiguity check.
    pub fn boundaries_per_year(&self) -> std::collections::BTreeMap<i32, usize> {
        use chrono::Datelike;
        let mut out = std::collections::BTreeMap::new();
        for (date, _, _) in &self.boundary_dates {
            *out.entry(date.year()).or_insert(0) += 1;
        }
        out
    }

    /// Fraction of days whose label matches the same calendar date one year
    /// later; `None` when no such pairs exist (single-year input).
    pub fn year_on_year_agreement(&self) -> Option<f64> {
        use chrono::Datelike;
        let mut matches = 0usize;
        let mut total = 0usize;
        for (date, season) in &self.days {
            let Some(next) = NaiveDate::from_ymd_opt(date.year() + 1, date.month(), date.day())
            else {
                continue; // february 29
            };
            if let Some(other) = self.season_of(next) {
                total += 1;
                if other == *season {
                    matches += 1;
                }
            }
        }
        (total > 0).then(|| matches as f64 / total as f64)
    }
}

/// Identify W/T/S seasons from at least one full year of day features.
///
/// Standardizes (sunshine_minutes, csi_energy) to z-scores, clusters with
/// k-means (k = 3), names clusters by descending mean clear-sky energy
/// (S, T, W), and optionally applies a centered majority-vote filter of odd
/// width `smoothing_window` to enforce contiguity. Scores are computed on
/// the standardized features with the raw (pre-smoothing) labels.
pub fn identify_seasons(
    features: &[DayFeatures],
    params: &KMeansParams,
    smoothing_window: Option<usize>,
) -> Result<SeasonCalendar> {
    identify_seasons_with_min(features, params, smoothing_window, 365)
}

/// [`identify_seasons`] with a configurable day-count gate, for short
/// fixtures; real runs keep the one-year default.
pub fn identify_seasons_with_min(
    features: &[DayFeatures],
    params: &KMeansParams,
    smoothing_window: Option<usize>,
    min_days: usize,
) -> Result<SeasonCalendar> {
    if features.len() < min_days {
        return Err(Error::InsufficientData { got: features.len(), need: min_days });
    }
    if let Some(w) = smoothing_window {
        if w % 2 == 0 {
            return Err(Error::Config(format!("smoothing_window {w} must be odd")));
        }
    }
    let mut ordered: Vec<&DayFeatures> = features.iter().collect();
    ordered.sort_by_key(|f| f.date);

    let points = standardize(&ordered);
    let assignment = kmeans(&points, 3, params)?;

    // name clusters by descending mean clear-sky energy: S, T, W
    let Centers::Means(_) = &assignment.centers else {
        unreachable!("kmeans returns mean centers");
    };
    let mut energy_rank: Vec<(usize, f64)> = (0..3)
        .map(|c| {
            let members = assignment.members(c);
            let mean = members.iter().map(|&i| ordered[i].csi_energy).sum::<f64>()
                / members.len() as f64;
            (c, mean)
        })
        .collect();
    energy_rank.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut season_of_cluster = [Season::W; 3];
    season_of_cluster[energy_rank[0].0] = Season::S;
    season_of_cluster[energy_rank[1].0] = Season::T;
    season_of_cluster[energy_rank[2].0] = Season::W;

    let raw: Vec<Season> = assignment
        .labels
        .iter()
        .map(|&c| season_of_cluster[c])
        .collect();

    let (labels, smoothing_changes) = match smoothing_window {
        Some(w) => majority_smooth(&raw, w),
        None => (raw.clone(), 0),
    };

    let scores = QualityScores {
        silhouette: silhouette_points(&points, &assignment.labels)?,
        calinski_harabasz: calinski_harabasz(&points, &assignment.labels)?,
        davies_bouldin: davies_bouldin(&points, &assignment.labels)?,
        space: QualitySpace::FeatureSpace,
    };

    let days: Vec<(NaiveDate, Season)> = ordered
        .iter()
        .zip(&labels)
        .map(|(f, &s)| (f.date, s))
        .collect();
    let boundary_dates = days
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[1].0, w[0].1, w[1].1))
        .collect();

    Ok(SeasonCalendar { days, boundary_dates, scores, smoothing_changes })
}

/// Z-score standardization of (sunshine_minutes, csi_energy).
fn standardize(ordered: &[&DayFeatures]) -> Vec<Vec<f64>> {
    let n = ordered.len() as f64;
    let columns = [
        ordered.iter().map(|f| f.sunshine_minutes as f64).collect::<Vec<f64>>(),
        ordered.iter().map(|f| f.csi_energy).collect::<Vec<f64>>(),
    ];
    let stats: Vec<(f64, f64)> = columns
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt().max(1e-12))
        })
        .collect();
    (0..ordered.len())
        .map(|i| {
            columns
                .iter()
                .zip(&stats)
                .map(|(col, (mean, sd))| (col[i] - mean) / sd)
                .collect()
        })
        .collect()
}

/// Centered majority vote of odd width; ties keep the existing label.
/// Returns the smoothed labels and the number of changed days.
fn majority_smooth(labels: &[Season], window: usize) -> (Vec<Season>, usize) {
    let half = window / 2;
    let n = labels.len();
    let mut out = Vec::with_capacity(n);
    let mut changes = 0;
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let mut counts = [0usize; 3];
        for &label in &labels[lo..=hi] {
            counts[label as usize] += 1;
        }
        let best = *counts.iter().max().unwrap();
        let winner = if counts[labels[i] as usize] == best {
            labels[i] // tie keeps the original
        } else {
            Season::ALL[counts.iter().position(|&c| c == best).unwrap()]
        };
        if winner != labels[i] {
            changes += 1;
        }
        out.push(winner);
    }
    (out, changes)
}
