//! Raw minute-sampled irradiance/cloud CSV ingestion and day-quality cleaning.
//!
//! Parsing never fails on bad numeric cells (they become missing values);
//! it fails on structural problems: missing columns or unparseable
//! timestamps. Days are segmented onto a fixed 1440-minute grid in the
//! site's fixed-offset local time, then gated and gap-filled by
//! [`clean_day`].

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, MINUTES_PER_DAY};

/// Column mapping for the input CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvFormat {
    pub timestamp_column: String,
    pub ghi_column: String,
    #[serde(default)]
    pub cloud_column: Option<String>,
}

/// One parsed CSV row: a minute-aligned timestamp with optional readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub timestamp: NaiveDateTime,
    pub ghi: Option<f64>,
    pub cloud_cover: Option<f64>,
}

/// One civil day on the fixed 1440-minute grid, missing values allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub ghi: Vec<Option<f64>>,
    pub cloud_cover: Option<Vec<Option<f64>>>,
    /// Fraction of the 1440 slots with a GHI value.
    pub ghi_availability: f64,
    /// Fraction of the 1440 slots with a cloud value, when the channel exists.
    pub cloud_availability: Option<f64>,
}

impl DayRecord {
    /// Flatten back to one sample per minute (used by round-trip checks).
    pub fn to_samples(&self) -> Vec<RawSample> {
        (0..MINUTES_PER_DAY)
            .map(|m| RawSample {
                timestamp: self
                    .date
                    .and_hms_opt(m as u32 / 60, m as u32 % 60, 0)
                    .unwrap(),
                ghi: self.ghi[m],
                cloud_cover: self
                    .cloud_cover
                    .as_ref()
                    .and_then(|cc| cc[m]),
            })
            .collect()
    }
}

/// Day-quality gate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityPolicy {
    /// Minimum fraction of minutes with data for a day to be retained.
    pub min_availability: f64,
    /// Longest interior missing run (minutes) that may be interpolated.
    pub max_interp_gap: usize,
}

impl Default for QualityPolicy {
    fn default() -> Self {
        Self {
            min_availability: 0.9,
            max_interp_gap: 60,
        }
    }
}

impl QualityPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_availability > 0.0 && self.min_availability <= 1.0) {
            return Err(Error::Config(format!(
                "min_availability {} outside (0, 1]",
                self.min_availability
            )));
        }
        if self.max_interp_gap < 1 {
            return Err(Error::Config("max_interp_gap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Why a day was dropped; a quality outcome, not a fault.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRejection {
    pub date: NaiveDate,
    pub availability: f64,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RejectionReason {
    /// GHI availability below the policy threshold.
    LowAvailability { threshold: f64 },
    /// An interior missing run longer than the interpolation limit.
    GapTooLong { gap_minutes: usize, limit: usize },
}

impl std::fmt::Display for DayRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.reason {
            RejectionReason::LowAvailability { threshold } => write!(
                f,
                "ghi availability {:.4} below threshold {:.4}",
                self.availability, threshold
            ),
            RejectionReason::GapTooLong { gap_minutes, limit } => write!(
                f,
                "interior gap of {gap_minutes} min exceeds {limit} min interpolation limit"
            ),
        }
    }
}

/// Parse a raw CSV byte stream into samples, in file order.
///
/// Unparseable numeric cells become missing values; a malformed header or an
/// unparseable timestamp is an error.
pub fn parse_raw_csv<R: Read>(source: R, format: &CsvFormat) -> Result<Vec<RawSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| Error::CsvFormat {
            message: format!("unreadable header row: {e}"),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::CsvFormat {
                message: format!("missing column {name:?} in header {:?}", headers),
            })
    };
    let ts_idx = col(&format.timestamp_column)?;
    let ghi_idx = col(&format.ghi_column)?;
    let cloud_idx = match &format.cloud_column {
        Some(name) => Some(col(name)?),
        None => None,
    };

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::CsvFormat {
            message: format!("unreadable row: {e}"),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(samples.len() + 2);
        let raw_ts = record.get(ts_idx).unwrap_or("").trim();
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| Error::Timestamp {
            line,
            value: raw_ts.to_string(),
        })?;
        let ghi = record.get(ghi_idx).and_then(parse_cell);
        let cloud_cover = cloud_idx.and_then(|i| record.get(i)).and_then(parse_cell);
        samples.push(RawSample {
            timestamp,
            ghi,
            cloud_cover,
        });
    }
    Ok(samples)
}

/// Accepts `YYYY-MM-DD HH:MM` (space or `T` separator, optional seconds),
/// truncated to the minute.
fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.with_second(0).unwrap().with_nanosecond(0).unwrap())
}

fn parse_cell(cell: &str) -> Option<f64> {
    let v: f64 = cell.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Partition samples into per-date day records on the minute grid.
///
/// Sorts defensively; duplicate minutes resolve last-wins (warned). Minutes
/// without samples are missing.
pub fn segment_days(samples: &[RawSample]) -> Vec<DayRecord> {
    let mut sorted: Vec<&RawSample> = samples.iter().collect();
    sorted.sort_by_key(|s| s.timestamp);

    let mut by_date: BTreeMap<NaiveDate, Vec<Option<&RawSample>>> = BTreeMap::new();
    for sample in sorted {
        let slots = by_date
            .entry(sample.timestamp.date())
            .or_insert_with(|| vec![None; MINUTES_PER_DAY]);
        let minute = sample.timestamp.time().num_seconds_from_midnight() as usize / 60;
        if slots[minute].is_some() {
            log::warn!(
                "duplicate sample at {}; keeping the last occurrence",
                sample.timestamp
            );
        }
        slots[minute] = Some(sample);
    }

    by_date
        .into_iter()
        .map(|(date, slots)| {
            let ghi: Vec<Option<f64>> = slots.iter().map(|s| s.and_then(|s| s.ghi)).collect();
            let cloud: Vec<Option<f64>> =
                slots.iter().map(|s| s.and_then(|s| s.cloud_cover)).collect();
            let ghi_availability = availability(&ghi);
            let has_cloud = cloud.iter().any(Option::is_some);
            DayRecord {
                date,
                ghi,
                cloud_availability: has_cloud.then(|| availability(&cloud)),
                cloud_cover: has_cloud.then_some(cloud),
                ghi_availability,
            }
        })
        .collect()
}

fn availability(values: &[Option<f64>]) -> f64 {
    values.iter().filter(|v| v.is_some()).count() as f64 / values.len() as f64
}

/// Apply the cleaning rules to one day: non-physical values to missing,
/// availability gate, short-gap interpolation, edge fill.
///
/// Returns the cleaned, fully-populated day, or the rejection describing why
/// it was dropped.
pub fn clean_day(
    day: &DayRecord,
    policy: &QualityPolicy,
) -> std::result::Result<DayRecord, DayRejection> {
    // non-physical readings become missing before availability is computed
    let mut ghi: Vec<Option<f64>> = day
        .ghi
        .iter()
        .map(|v| v.filter(|x| x.is_finite() && *x >= 0.0))
        .collect();
    let cloud: Option<Vec<Option<f64>>> = day.cloud_cover.as_ref().map(|cc| {
        cc.iter()
            .map(|v| v.filter(|x| x.is_finite() && (0.0..=100.0).contains(x)))
            .collect()
    });

    let measured_availability = availability(&ghi);
    if measured_availability < policy.min_availability {
        return Err(DayRejection {
            date: day.date,
            availability: measured_availability,
            reason: RejectionReason::LowAvailability {
                threshold: policy.min_availability,
            },
        });
    }

    let first = ghi.iter().position(Option::is_some).expect("gate passed");
    let last = ghi.iter().rposition(Option::is_some).unwrap();

    // leading/trailing runs take the nearest observed value; the pipeline
    // zeroes whatever falls outside the clear-sky daylight mask later
    let first_value = ghi[first];
    let last_value = ghi[last];
    ghi[..first].fill(first_value);
    ghi[last + 1..].fill(last_value);

    // interior runs interpolate linearly if short enough
    let mut i = first;
    while i <= last {
        if ghi[i].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while ghi[i].is_none() {
            i += 1;
        }
        let run_len = i - run_start;
        if run_len > policy.max_interp_gap {
            return Err(DayRejection {
                date: day.date,
                availability: measured_availability,
                reason: RejectionReason::GapTooLong {
                    gap_minutes: run_len,
                    limit: policy.max_interp_gap,
                },
            });
        }
        let left = ghi[run_start - 1].unwrap();
        let right = ghi[i].unwrap();
        let span = (run_len + 1) as f64;
        for (k, slot) in ghi[run_start..i].iter_mut().enumerate() {
            *slot = Some(left + (right - left) * (k + 1) as f64 / span);
        }
    }

    let cloud_availability = cloud.as_ref().map(|cc| availability(cc));
    Ok(DayRecord {
        date: day.date,
        ghi_availability: availability(&ghi),
        ghi,
        cloud_cover: cloud,
        cloud_availability,
    })
}
