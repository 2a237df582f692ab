//! Ineichen-Perez clear-sky GHI with configurable monthly Linke turbidity.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::solar::{self, SiteConfig};
use crate::{Error, Result, MINUTES_PER_DAY};

/// Twelve monthly Linke turbidity values, interpolated piecewise-linearly
/// between month midpoints (periodic across the year boundary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TurbidityTable {
    monthly: [f64; 12],
}

impl TurbidityTable {
    pub fn new(monthly: [f64; 12]) -> Result<Self> {
        for &tl in &monthly {
            validate_turbidity(tl)?;
        }
        Ok(Self { monthly })
    }

    /// Same turbidity for every month.
    pub fn uniform(tl: f64) -> Result<Self> {
        validate_turbidity(tl)?;
        Ok(Self { monthly: [tl; 12] })
    }

    pub fn monthly(&self) -> &[f64; 12] {
        &self.monthly
    }

    /// Turbidity for a date, linear between month midpoints.
    pub fn for_date(&self, date: NaiveDate) -> f64 {
        let year = date.year();
        let year_len = days_in_year(year) as f64;
        let doy = date.ordinal() as f64;

        let mid = |month: u32| -> f64 {
            let start = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
            let next = if month == 12 {
                NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
            } else {
                NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
            };
            let len = (next - start).num_days() as f64;
            start.ordinal() as f64 + (len - 1.0) / 2.0
        };

        // find the surrounding pair of midpoints, wrapping at the year ends
        let mids: Vec<(f64, f64)> = (1..=12).map(|m| (mid(m), self.monthly[m as usize - 1])).collect();
        let (x0, y0, x1, y1) = if doy < mids[0].0 {
            (mids[11].0 - year_len, mids[11].1, mids[0].0, mids[0].1)
        } else if doy >= mids[11].0 {
            (mids[11].0, mids[11].1, mids[0].0 + year_len, mids[0].1)
        } else {
            let i = mids.iter().rposition(|&(x, _)| x <= doy).unwrap();
            (mids[i].0, mids[i].1, mids[i + 1].0, mids[i + 1].1)
        };
        let t = if x1 == x0 { 0.0 } else { (doy - x0) / (x1 - x0) };
        y0 + t * (y1 - y0)
    }
}

fn days_in_year(year: i32) -> i64 {
    (NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
        - NaiveDate::from_ymd_opt(year, 1, 1).unwrap())
    .num_days()
}

fn validate_turbidity(tl: f64) -> Result<()> {
    if !(1.0..=10.0).contains(&tl) || !tl.is_finite() {
        return Err(Error::InvalidTurbidity(tl));
    }
    Ok(())
}

/// One civil day of minute-gridded clear-sky GHI.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearSkyDay {
    pub date: NaiveDate,
    /// 1440 values in W/m², zero exactly when the sun is below the horizon.
    pub csi: Vec<f64>,
}

impl ClearSkyDay {
    /// Per-minute sun-above-horizon mask (csi > 0).
    pub fn daylight_mask(&self) -> Vec<bool> {
        self.csi.iter().map(|&v| v > 0.0).collect()
    }
}

/// Ineichen-Perez clear-sky GHI at one instant, W/m².
pub fn clearsky_ghi(t: NaiveDateTime, site: &SiteConfig, tl: f64) -> Result<f64> {
    validate_turbidity(tl)?;
    let pos = solar::solar_position(t, site)?;
    let airmass = match solar::airmass(pos.zenith, site.elevation_m) {
        Some(am) => am,
        None => return Ok(0.0),
    };
    let h = site.elevation_m;
    let fh1 = (-h / 8000.0).exp();
    let fh2 = (-h / 1250.0).exp();
    let cg1 = 5.09e-5 * h + 0.868;
    let cg2 = 3.92e-5 * h + 0.0387;
    let normal_extra = solar::SOLAR_CONSTANT * pos.earth_sun_factor;
    let ghi = cg1
        * normal_extra
        * pos.zenith.to_radians().cos()
        * (-cg2 * airmass * (fh1 + fh2 * (tl - 1.0))).exp()
        * (0.01 * airmass.powf(1.8)).exp();
    Ok(ghi.max(0.0))
}

/// Clear-sky day on the minute grid, evaluated at minute midpoints (hh:mm:30)
/// with the turbidity interpolated from `table` for that date.
pub fn clearsky_day(date: NaiveDate, site: &SiteConfig, table: &TurbidityTable) -> Result<ClearSkyDay> {
    let tl = table.for_date(date);
    let mut csi = Vec::with_capacity(MINUTES_PER_DAY);
    for minute in 0..MINUTES_PER_DAY as u32 {
        let t = date
            .and_hms_opt(minute / 60, minute % 60, 30)
            .expect("minute within day");
        csi.push(clearsky_ghi(t, site, tl)?);
    }
    Ok(ClearSkyDay { date, csi })
}

/// Audit export: `date,minute,csi_wm2` rows for a set of clear-sky days.
pub fn write_csv<W: std::io::Write>(days: &[ClearSkyDay], mut out: W) -> Result<()> {
    writeln!(out, "date,minute,csi_wm2")?;
    for day in days {
        for (minute, v) in day.csi.iter().enumerate() {
            writeln!(out, "{},{},{}", day.date, minute, v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solar::GOLDEN;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn turbidity_bounds_enforced() {
        assert!(TurbidityTable::uniform(0.5).is_err());
        assert!(TurbidityTable::uniform(11.0).is_err());
        assert!(clearsky_ghi(
            date(2017, 6, 1).and_hms_opt(12, 0, 0).unwrap(),
            &GOLDEN,
            0.0
        )
        .is_err());
    }

    #[test]
    fn turbidity_interpolation_hits_midpoints_and_wraps() {
        let mut monthly = [3.0; 12];
        monthly[0] = 2.0; // january
        monthly[6] = 5.0; // july
        let table = TurbidityTable::new(monthly).unwrap();
        // january midpoint (doy 16) is exactly the january value
        assert!((table.for_date(date(2017, 1, 16)) - 2.0).abs() < 1e-9);
        // july midpoint
        assert!((table.for_date(date(2017, 7, 16)) - 5.0).abs() < 1e-9);
        // between january and february midpoints the value rises toward 3.0
        let v = table.for_date(date(2017, 1, 31));
        assert!(v > 2.0 && v < 3.0, "{v}");
        // year wrap: january 1 interpolates between december and january mids
        let v = table.for_date(date(2017, 1, 1));
        assert!(v > 2.0 && v < 3.0, "{v}");
    }

    #[test]
    fn night_is_zero() {
        let v = clearsky_ghi(
            date(2017, 6, 21).and_hms_opt(0, 30, 0).unwrap(),
            &GOLDEN,
            3.0,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sea_level_overhead_sun_in_band() {
        // equatorial site near local noon puts the sun nearly overhead at the
        // equinox; the model value must land in the documented (800, 1150) band
        let site = SiteConfig {
            latitude: 0.0,
            longitude: 0.0,
            elevation_m: 0.0,
            utc_offset_hours: 0.0,
        };
        let v = (0..1440)
            .map(|m| {
                clearsky_ghi(
                    date(2017, 3, 20)
                        .and_hms_opt(m / 60, m % 60, 30)
                        .unwrap(),
                    &site,
                    3.0,
                )
                .unwrap()
            })
            .fold(0.0, f64::max);
        assert!(v > 800.0 && v < 1150.0, "peak {v}");
    }

    #[test]
    fn polar_night_day_is_all_zero() {
        let site = SiteConfig {
            latitude: 80.0,
            longitude: 0.0,
            elevation_m: 0.0,
            utc_offset_hours: 0.0,
        };
        let day = clearsky_day(date(2017, 12, 21), &site, &TurbidityTable::uniform(3.0).unwrap())
            .unwrap();
        assert!(day.csi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn golden_june_day_unimodal_with_noon_peak() {
        let day = clearsky_day(date(2017, 6, 21), &GOLDEN, &TurbidityTable::uniform(3.0).unwrap())
            .unwrap();
        let peak = day
            .csi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // solar noon for Golden is near 13:00 local standard time
        let noon = 13 * 60;
        assert!((peak as i64 - noon as i64).abs() <= 90, "peak at minute {peak}");
        // unimodal up to a 1 W/m² ripple
        for w in day.csi[..=peak].windows(2) {
            assert!(w[1] >= w[0] - 1.0);
        }
        for w in day.csi[peak..].windows(2) {
            assert!(w[1] <= w[0] + 1.0);
        }
        // zero exactly when the sun is down
        let mask = day.daylight_mask();
        for (i, &lit) in mask.iter().enumerate() {
            assert_eq!(lit, day.csi[i] > 0.0);
        }
    }

    #[test]
    fn more_turbidity_means_less_irradiance() {
        let noon = date(2017, 6, 21).and_hms_opt(13, 0, 30).unwrap();
        let mut prev = f64::INFINITY;
        for tl in [2.0, 3.0, 4.0, 5.0, 7.0] {
            let v = clearsky_ghi(noon, &GOLDEN, tl).unwrap();
            assert!(v < prev, "tl {tl} gave {v} >= {prev}");
            prev = v;
        }
    }

    #[test]
    fn higher_elevation_never_darker() {
        let noon = date(2017, 6, 21).and_hms_opt(13, 0, 30).unwrap();
        let low = clearsky_ghi(noon, &SiteConfig { elevation_m: 100.0, ..GOLDEN }, 3.0).unwrap();
        let high = clearsky_ghi(noon, &SiteConfig { elevation_m: 3000.0, ..GOLDEN }, 3.0).unwrap();
        assert!(high >= low, "{high} < {low}");
    }
}
