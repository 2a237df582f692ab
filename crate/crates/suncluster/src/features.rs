//! Per-day scalar features: beta (daily irradiance index), sunshine duration,
//! clear-sky energy, and mean cloud cover.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clearsky::ClearSkyDay;
use crate::ingest::{clean_day, DayRecord, DayRejection, QualityPolicy};
use crate::{Error, Result};

/// Scalar features for one retained day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFeatures {
    pub date: NaiveDate,
    /// Measured daily energy over clear-sky daily energy; not clamped at 1.
    pub beta: f64,
    /// Minutes with clear-sky GHI above the sunshine threshold.
    pub sunshine_minutes: u32,
    /// Daily clear-sky energy in kWh/m².
    pub csi_energy: f64,
    /// Daytime mean of total cloud cover in percent, when available.
    pub mean_cloud_cover: Option<f64>,
}

/// Trapezoidal integral over the minute grid, in value-minutes.
pub(crate) fn trapezoid(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum()
}

/// Daily irradiance index: ratio of the trapezoidal integrals of measured and
/// clear-sky GHI over the full day.
pub fn beta(day: &DayRecord, cs: &ClearSkyDay) -> Result<f64> {
    let denominator = trapezoid(&cs.csi);
    if denominator <= 0.0 {
        return Err(Error::ZeroClearSkyEnergy(cs.date));
    }
    let measured: Vec<f64> = day.ghi.iter().map(|v| v.unwrap_or(0.0)).collect();
    Ok(trapezoid(&measured) / denominator)
}

/// Count of minutes with clear-sky GHI strictly above `threshold` W/m².
pub fn sunshine_duration(cs: &ClearSkyDay, threshold: f64) -> u32 {
    cs.csi.iter().filter(|&&v| v > threshold).count() as u32
}

/// Daily clear-sky energy in kWh/m² (trapezoid of W/m² on the minute grid).
pub fn csi_energy(cs: &ClearSkyDay) -> f64 {
    trapezoid(&cs.csi) / 60_000.0
}

/// Mean of the non-missing cloud-cover values over daytime minutes; `None`
/// without a cloud channel or when cloud availability is below
/// `min_cloud_availability`.
pub fn mean_cloud_cover(
    day: &DayRecord,
    daytime_mask: &[bool],
    min_cloud_availability: f64,
) -> Option<f64> {
    let cloud = day.cloud_cover.as_ref()?;
    if day.cloud_availability? < min_cloud_availability {
        return None;
    }
    let values: Vec<f64> = cloud
        .iter()
        .zip(daytime_mask)
        .filter(|(_, &daylight)| daylight)
        .filter_map(|(v, _)| *v)
        .collect();
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// The feature extraction output: cleaned daylight-masked days, their
/// features, and the rejections the quality gate produced.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub features: Vec<DayFeatures>,
    /// Retained days, cleaned, with minutes outside the clear-sky daylight
    /// mask set to zero; index-aligned with `features`.
    pub days: Vec<DayRecord>,
    pub rejected: Vec<DayRejection>,
}

/// Clean every day against `policy`, zero the retained days outside their
/// clear-sky daylight mask, and reduce each to [`DayFeatures`].
///
/// Every input date must have a matching clear-sky day.
pub fn feature_table(
    days: &[DayRecord],
    clearsky_days: &[ClearSkyDay],
    policy: &QualityPolicy,
    sunshine_threshold: f64,
) -> Result<FeatureTable> {
    policy.validate()?;
    let by_date: BTreeMap<NaiveDate, &ClearSkyDay> =
        clearsky_days.iter().map(|cs| (cs.date, cs)).collect();

    let mut table = FeatureTable {
        features: Vec::new(),
        days: Vec::new(),
        rejected: Vec::new(),
    };
    for day in days {
        let cs = by_date.get(&day.date).ok_or(Error::DatePairing(day.date))?;
        let mut cleaned = match clean_day(day, policy) {
            Ok(cleaned) => cleaned,
            Err(rejection) => {
                log::info!("dropping {}: {}", rejection.date, rejection);
                table.rejected.push(rejection);
                continue;
            }
        };
        // daylight masking: night minutes contribute exactly zero to beta
        for (slot, &csi) in cleaned.ghi.iter_mut().zip(&cs.csi) {
            if csi == 0.0 {
                *slot = Some(0.0);
            }
        }
        let mask = cs.daylight_mask();
        table.features.push(DayFeatures {
            date: day.date,
            beta: beta(&cleaned, cs)?,
            sunshine_minutes: sunshine_duration(cs, sunshine_threshold),
            csi_energy: csi_energy(cs),
            mean_cloud_cover: mean_cloud_cover(&cleaned, &mask, policy.min_availability),
        });
        table.days.push(cleaned);
    }
    Ok(table)
}
