//! Profile preparation and pairwise day-distance computation: Euclidean,
//! Manhattan, and dynamic time warping with an optional Sakoe-Chiba band.
//!
//! The DTW local cost is the squared difference and the reported distance is
//! the square root of the accumulated cost, so an equal-length DTW along the
//! diagonal path reproduces the Euclidean distance; warping can only lower it.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::DayRecord;
use crate::{Error, Result};

/// A day's GHI profile prepared for distance computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVector {
    pub values: Vec<f64>,
    /// Resampling policy tag, e.g. `full-1440` or `daytime-80`.
    pub policy_id: String,
}

impl ProfileVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How to turn a cleaned day into a [`ProfileVector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResampleMode {
    /// The 1440-minute vector unchanged, night zeros retained.
    FullGrid,
    /// The sunrise-to-sunset span linearly resampled to `points` samples.
    Daytime { points: usize },
}

/// Prepare one day's profile. Daytime mode takes the span between the first
/// and last strictly-positive minutes (the pipeline zeroes night minutes
/// beforehand).
pub fn resample_profile(day: &DayRecord, mode: ResampleMode) -> Result<ProfileVector> {
    let values: Vec<f64> = day.ghi.iter().map(|v| v.unwrap_or(0.0)).collect();
    match mode {
        ResampleMode::FullGrid => Ok(ProfileVector {
            policy_id: format!("full-{}", values.len()),
            values,
        }),
        ResampleMode::Daytime { points } => {
            if points < 2 {
                return Err(Error::TooFewPoints(points));
            }
            let first = values
                .iter()
                .position(|&v| v > 0.0)
                .ok_or(Error::NoDaylight(day.date))?;
            let last = values.iter().rposition(|&v| v > 0.0).unwrap();
            let span = (last - first) as f64;
            let resampled: Vec<f64> = (0..points)
                .map(|k| {
                    let pos = first as f64 + span * k as f64 / (points - 1) as f64;
                    let lo = pos.floor() as usize;
                    let hi = pos.ceil() as usize;
                    let frac = pos - lo as f64;
                    values[lo] * (1.0 - frac) + values[hi] * frac
                })
                .collect();
            Ok(ProfileVector {
                values: resampled,
                policy_id: format!("daytime-{points}"),
            })
        }
    }
}

fn check_equal_lengths(a: &ProfileVector, b: &ProfileVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { a: a.len(), b: b.len() });
    }
    Ok(())
}

/// Square root of the sum of squared element differences.
pub fn euclidean(a: &ProfileVector, b: &ProfileVector) -> Result<f64> {
    check_equal_lengths(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Sum of absolute element differences.
pub fn manhattan(a: &ProfileVector, b: &ProfileVector) -> Result<f64> {
    check_equal_lengths(a, b)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

/// Dynamic time warping distance with squared-difference local cost over
/// monotone boundary-anchored paths with steps {(1,0),(0,1),(1,1)}.
///
/// `band` is a Sakoe-Chiba half-width in samples; it must be at least the
/// length difference when supplied.
pub fn dtw(a: &ProfileVector, b: &ProfileVector, band: Option<usize>) -> Result<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::LengthMismatch { a: n, b: m });
    }
    let diff = n.abs_diff(m);
    if let Some(w) = band {
        if w < diff {
            return Err(Error::InfeasibleBand { band: w, diff });
        }
    }
    let window = band.unwrap_or(n.max(m));

    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for i in 0..n {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(m - 1);
        for j in lo..=hi {
            let cost = (a.values[i] - b.values[j]) * (a.values[i] - b.values[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { curr[j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1].sqrt())
}

/// Which kernel a [`DistanceMatrix`] was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricTag {
    Euclidean,
    Manhattan,
    Dtw,
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricTag::Euclidean => "ed",
            MetricTag::Manhattan => "md",
            MetricTag::Dtw => "dtw",
        })
    }
}

/// Symmetric pairwise day-distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    metric: MetricTag,
    day_index: Vec<NaiveDate>,
    values: Vec<f64>, // row-major n*n
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, and finite non-negative entries.
    pub fn new(metric: MetricTag, day_index: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let n = day_index.len();
        if values.len() != n * n {
            return Err(Error::CacheFormat(format!(
                "{} entries for {n} days",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::CacheFormat(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let d = values[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::CacheFormat(format!("bad distance at ({i},{j})")));
                }
                if d != values[j * n + i] {
                    return Err(Error::CacheFormat(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        Ok(Self { metric, day_index, values })
    }

    pub fn n(&self) -> usize {
        self.day_index.len()
    }

    pub fn metric(&self) -> MetricTag {
        self.metric
    }

    pub fn day_index(&self) -> &[NaiveDate] {
        &self.day_index
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Mean distance from `i` to the listed items, excluding `i` itself.
    pub fn mean_to(&self, i: usize, items: &[usize]) -> f64 {
        let others: Vec<usize> = items.iter().copied().filter(|&j| j != i).collect();
        if others.is_empty() {
            return 0.0;
        }
        others.iter().map(|&j| self.get(i, j)).sum::<f64>() / others.len() as f64
    }

    /// Write as CSV with ISO-date row/column headers, full float precision.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("date");
        for d in &self.day_index {
            out.push(',');
            out.push_str(&d.to_string());
        }
        out.push('\n');
        for i in 0..self.n() {
            out.push_str(&self.day_index[i].to_string());
            for j in 0..self.n() {
                out.push(',');
                out.push_str(&format!("{}", self.get(i, j)));
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Read back a matrix written by [`save_csv`](Self::save_csv).
    pub fn load_csv(path: &Path, metric: MetricTag) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::CacheFormat("empty file".into()))?;
        let day_index: Vec<NaiveDate> = header
            .split(',')
            .skip(1)
            .map(|s| {
                s.parse::<NaiveDate>()
                    .map_err(|e| Error::CacheFormat(format!("bad date {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let n = day_index.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let _row_date = cells.next();
            for cell in cells {
                let v: f64 = cell
                    .parse()
                    .map_err(|e| Error::CacheFormat(format!("row {i}: {e}")))?;
                values.push(v);
            }
        }
        Self::new(metric, day_index, values)
    }

    /// Content-addressed cache key over the metric, resampling policy, band,
    /// and the exact day set.
    pub fn cache_key(
        metric: MetricTag,
        policy_id: &str,
        band: Option<usize>,
        dates: &[NaiveDate],
    ) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(metric.to_string().as_bytes());
        hasher.update(b"|");
        hasher.update(policy_id.as_bytes());
        hasher.update(b"|");
        hasher.update(match band {
            Some(w) => format!("band{w}"),
            None => "noband".to_string(),
        });
        for d in dates {
            hasher.update(b"|");
            hasher.update(d.to_string().as_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }
}

/// Compute all unordered pairs once and assemble the symmetric matrix.
/// The result is identical regardless of thread count.
pub fn pairwise_matrix(
    profiles: &[ProfileVector],
    dates: &[NaiveDate],
    metric: MetricTag,
    band: Option<usize>,
) -> Result<DistanceMatrix> {
    if profiles.len() != dates.len() {
        return Err(Error::LengthMismatch { a: profiles.len(), b: dates.len() });
    }
    let n = profiles.len();
    if matches!(metric, MetricTag::Euclidean | MetricTag::Manhattan) {
        for p in profiles.iter().skip(1) {
            check_equal_lengths(&profiles[0], p)?;
        }
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let distances: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| match metric {
            MetricTag::Euclidean => euclidean(&profiles[i], &profiles[j]),
            MetricTag::Manhattan => manhattan(&profiles[i], &profiles[j]),
            MetricTag::Dtw => dtw(&profiles[i], &profiles[j], band),
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; n * n];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    DistanceMatrix::new(metric, dates.to_vec(), values)
}
