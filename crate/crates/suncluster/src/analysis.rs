//! Level-2 artifacts: H/M/L level naming, beta ranges, cluster mean
//! profiles, confusion matrices against the beta reference, and day-to-day
//! transition probabilities per season.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::ingest::DayRecord;
use crate::seasons::Season;
use crate::{Error, Result, MINUTES_PER_DAY};

/// Irradiance level: clear, intermittent, cloudy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    H,
    M,
    L,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::H, Level::M, Level::L];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::H => "H",
            Level::M => "M",
            Level::L => "L",
        })
    }
}

/// Which level-2 clustering method produced a labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Beta,
    Ed,
    Dtw,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Beta, Method::Ed, Method::Dtw];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Beta => "beta",
            Method::Ed => "ed",
            Method::Dtw => "dtw",
        })
    }
}

/// One labeled day inside a [`LabeledCalendar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledDay {
    pub date: NaiveDate,
    pub season: Season,
    pub level: Level,
    pub beta: f64,
}

/// Per-day season and level labels for one method, ascending by date.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledCalendar {
    pub method: Method,
    pub days: Vec<LabeledDay>,
}

/// 3x3 row-normalized confusion of a method against the beta reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Rows: reference H/M/L; columns: method H/M/L.
    pub counts: [[u64; 3]; 3],
    /// Rows normalized where the reference class is non-empty.
    pub fractions: [[f64; 3]; 3],
}

/// 3x3 next-day level transition matrix for one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub season: Season,
    /// Rows: today's level; columns: tomorrow's level.
    pub counts: [[u64; 3]; 3],
    /// Rows with nonzero count sum to 1; empty rows are all-zero.
    pub probabilities: [[f64; 3]; 3],
}

/// Order k=3 clusters by descending mean beta of members and name them
/// H, M, L. Ties break by descending max beta, then lowest cluster index.
pub fn assign_levels(assignment: &ClusterAssignment, betas: &[f64]) -> Result<Vec<Level>> {
    if assignment.k != 3 {
        return Err(Error::InvalidClusterCount { k: assignment.k, n: betas.len() });
    }
    if assignment.labels.len() != betas.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} betas",
            assignment.labels.len(),
            betas.len()
        )));
    }
    let mut stats: Vec<(usize, f64, f64)> = (0..3)
        .map(|c| {
            let members = assignment.members(c);
            let mean = members.iter().map(|&i| betas[i]).sum::<f64>() / members.len() as f64;
            let max = members.iter().map(|&i| betas[i]).fold(f64::NEG_INFINITY, f64::max);
            (c, mean, max)
        })
        .collect();
    stats.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(b.2.partial_cmp(&a.2).unwrap())
            .then(a.0.cmp(&b.0))
    });
    if stats[0].1 == stats[1].1 || stats[1].1 == stats[2].1 {
        log::warn!("tied cluster mean beta; breaking by max beta then index");
    }
    let mut level_of_cluster = [Level::L; 3];
    level_of_cluster[stats[0].0] = Level::H;
    level_of_cluster[stats[1].0] = Level::M;
    level_of_cluster[stats[2].0] = Level::L;
    Ok(assignment.labels.iter().map(|&c| level_of_cluster[c]).collect())
}

/// Min/max beta per (season, level) over the calendar's members.
pub fn beta_ranges(calendar: &LabeledCalendar) -> BTreeMap<(Season, Level), (f64, f64)> {
    let mut out: BTreeMap<(Season, Level), (f64, f64)> = BTreeMap::new();
    for day in &calendar.days {
        let entry = out
            .entry((day.season, day.level))
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        entry.0 = entry.0.min(day.beta);
        entry.1 = entry.1.max(day.beta);
    }
    out
}

/// Whether the H/M/L beta ranges of one season are pairwise disjoint.
pub fn ranges_disjoint(ranges: &BTreeMap<(Season, Level), (f64, f64)>, season: Season) -> bool {
    let get = |level| ranges.get(&(season, level));
    match (get(Level::H), get(Level::M), get(Level::L)) {
        (Some(h), Some(m), Some(l)) => h.0 > m.1 && m.0 > l.1,
        _ => false,
    }
}

/// Elementwise mean GHI over the members' 1440-minute grids.
pub fn mean_profiles(days: &[&DayRecord]) -> Vec<f64> {
    let mut mean = vec![0.0; MINUTES_PER_DAY];
    if days.is_empty() {
        return mean;
    }
    for day in days {
        for (acc, v) in mean.iter_mut().zip(&day.ghi) {
            *acc += v.unwrap_or(0.0);
        }
    }
    for v in mean.iter_mut() {
        *v /= days.len() as f64;
    }
    mean
}

/// Confusion of `method` against the beta `reference` over the same day set.
pub fn confusion(reference: &LabeledCalendar, method: &LabeledCalendar) -> Result<ConfusionMatrix> {
    if reference.days.len() != method.days.len()
        || reference
            .days
            .iter()
            .zip(&method.days)
            .any(|(a, b)| a.date != b.date)
    {
        return Err(Error::DaySetMismatch);
    }
    let mut counts = [[0u64; 3]; 3];
    for (r, m) in reference.days.iter().zip(&method.days) {
        counts[r.level.index()][m.level.index()] += 1;
    }
    Ok(ConfusionMatrix { fractions: normalize_rows(&counts), counts })
}

/// Next-day transition counts and probabilities within one season for the
/// calendar's method. Pairs must be exactly one calendar day apart and share
/// the season label; gaps and season boundaries break chains.
pub fn transitions(calendar: &LabeledCalendar, season: Season) -> TransitionMatrix {
    let mut counts = [[0u64; 3]; 3];
    for pair in calendar.days.windows(2) {
        let (today, tomorrow) = (&pair[0], &pair[1]);
        if tomorrow.date - today.date != chrono::Duration::days(1) {
            continue;
        }
        if today.season != season || tomorrow.season != season {
            continue;
        }
        counts[today.level.index()][tomorrow.level.index()] += 1;
    }
    TransitionMatrix { season, probabilities: normalize_rows(&counts), counts }
}

fn normalize_rows(counts: &[[u64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (row, counts_row) in out.iter_mut().zip(counts) {
        let total: u64 = counts_row.iter().sum();
        if total > 0 {
            for (cell, &c) in row.iter_mut().zip(counts_row) {
                *cell = c as f64 / total as f64;
            }
        }
    }
    out
}
