//! Solar position, airmass, and extraterrestrial irradiance.
//!
//! Closed-form NOAA-style solar position (declination + equation of time +
//! hour angle), good to a few hundredths of a degree over 1950-2100, which is
//! ample for driving the clear-sky model. No refraction modeling.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Solar constant in W/m² at mean earth-sun distance.
pub const SOLAR_CONSTANT: f64 = 1361.1;

/// Pressure scale height in meters for the airmass elevation correction.
const PRESSURE_SCALE_HEIGHT: f64 = 8434.5;

/// Measurement site: geographic position plus the fixed UTC offset its
/// instruments log in (no daylight-saving shifts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    /// Degrees north, in [-90, 90].
    pub latitude: f64,
    /// Degrees east, in [-180, 180].
    pub longitude: f64,
    /// Meters above sea level, >= -430.
    pub elevation_m: f64,
    /// Signed fixed offset from UTC in hours (local standard time).
    pub utc_offset_hours: f64,
}

impl SiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) || !self.latitude.is_finite() {
            return Err(Error::InvalidSite(format!("latitude {}", self.latitude)));
        }
        if !(-180.0..=180.0).contains(&self.longitude) || !self.longitude.is_finite() {
            return Err(Error::InvalidSite(format!("longitude {}", self.longitude)));
        }
        if self.elevation_m < -430.0 || !self.elevation_m.is_finite() {
            return Err(Error::InvalidSite(format!("elevation {}", self.elevation_m)));
        }
        if !(-12.0..=14.0).contains(&self.utc_offset_hours) {
            return Err(Error::InvalidSite(format!(
                "utc offset {}",
                self.utc_offset_hours
            )));
        }
        Ok(())
    }
}

/// Sun direction and earth-sun distance correction at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    /// Angle from local vertical in degrees, [0, 180].
    pub zenith: f64,
    /// Degrees clockwise from north, [0, 360).
    pub azimuth: f64,
    /// Dimensionless irradiance correction for orbital eccentricity,
    /// roughly [0.967, 1.033].
    pub earth_sun_factor: f64,
}

/// Solar position for a local civil instant at a site.
///
/// `t` is interpreted in the site's fixed UTC offset. Dates outside
/// 1950-2100 are rejected.
pub fn solar_position(t: NaiveDateTime, site: &SiteConfig) -> Result<SolarPosition> {
    site.validate()?;
    if !(1950..=2100).contains(&t.year()) {
        return Err(Error::DateOutOfRange(t.date()));
    }

    let utc = t - chrono::Duration::milliseconds((site.utc_offset_hours * 3.6e6) as i64);
    let jd = 2440587.5 + utc.and_utc().timestamp() as f64 / 86_400.0;
    let century = (jd - 2_451_545.0) / 36_525.0;

    let mean_long = (280.46646 + century * (36000.76983 + 0.0003032 * century)).rem_euclid(360.0);
    let mean_anom = 357.52911 + century * (35999.05029 - 0.0001537 * century);
    let eccentricity = 0.016708634 - century * (0.000042037 + 0.0000001267 * century);

    let mean_anom_rad = mean_anom.to_radians();
    let eq_of_center = mean_anom_rad.sin()
        * (1.914602 - century * (0.004817 + 0.000014 * century))
        + (2.0 * mean_anom_rad).sin() * (0.019993 - 0.000101 * century)
        + (3.0 * mean_anom_rad).sin() * 0.000289;

    let true_long = mean_long + eq_of_center;
    let omega = (125.04 - 1934.136 * century).to_radians();
    let apparent_long = (true_long - 0.00569 - 0.00478 * omega.sin()).to_radians();

    let mean_obliq = 23.0
        + (26.0 + (21.448 - century * (46.815 + century * (0.00059 - century * 0.001813))) / 60.0)
            / 60.0;
    let obliq = (mean_obliq + 0.00256 * omega.cos()).to_radians();

    let declination = (obliq.sin() * apparent_long.sin()).asin();

    let var_y = (obliq / 2.0).tan().powi(2);
    let mean_long_rad = mean_long.to_radians();
    let eot_minutes = 4.0
        * (var_y * (2.0 * mean_long_rad).sin() - 2.0 * eccentricity * mean_anom_rad.sin()
            + 4.0 * eccentricity * var_y * mean_anom_rad.sin() * (2.0 * mean_long_rad).cos()
            - 0.5 * var_y * var_y * (4.0 * mean_long_rad).sin()
            - 1.25 * eccentricity * eccentricity * (2.0 * mean_anom_rad).sin())
        .to_degrees();

    let local_minutes =
        t.num_seconds_from_midnight() as f64 / 60.0 + t.nanosecond() as f64 / 6e10;
    let true_solar_minutes = (local_minutes
        + eot_minutes
        + 4.0 * site.longitude
        - 60.0 * site.utc_offset_hours)
        .rem_euclid(1440.0);
    let hour_angle = if true_solar_minutes / 4.0 < 0.0 {
        true_solar_minutes / 4.0 + 180.0
    } else {
        true_solar_minutes / 4.0 - 180.0
    }
    .to_radians();

    let lat = site.latitude.to_radians();
    let cos_zenith =
        lat.sin() * declination.sin() + lat.cos() * declination.cos() * hour_angle.cos();
    let zenith = cos_zenith.clamp(-1.0, 1.0).acos().to_degrees();

    let azimuth = {
        let sin_zenith = zenith.to_radians().sin();
        if sin_zenith.abs() < 1e-9 || lat.cos().abs() < 1e-9 {
            // sun at the vertical or observer at a pole: azimuth degenerate
            0.0
        } else {
            let cos_az = ((lat.sin() * zenith.to_radians().cos()) - declination.sin())
                / (lat.cos() * sin_zenith);
            let az = cos_az.clamp(-1.0, 1.0).acos().to_degrees();
            if hour_angle > 0.0 {
                (az + 180.0).rem_euclid(360.0)
            } else {
                (540.0 - az).rem_euclid(360.0)
            }
        }
    };

    Ok(SolarPosition {
        zenith,
        azimuth,
        earth_sun_factor: eccentricity_factor(t.date().ordinal()),
    })
}

/// Eccentricity irradiance correction 1 + 0.033*cos(2*pi*doy/365).
fn eccentricity_factor(doy: u32) -> f64 {
    1.0 + 0.033 * (2.0 * std::f64::consts::PI * doy as f64 / 365.0).cos()
}

/// Pressure-corrected Kasten-Young (1989) airmass; `None` once the sun is at
/// or below the horizon (zenith >= 90 degrees).
pub fn airmass(zenith: f64, elevation_m: f64) -> Option<f64> {
    if !(0.0..90.0).contains(&zenith) {
        return None;
    }
    let relative = 1.0
        / (zenith.to_radians().cos() + 0.50572 * (96.07995 - zenith).powf(-1.6364));
    Some(relative * (-elevation_m / PRESSURE_SCALE_HEIGHT).exp())
}

/// Horizontal extraterrestrial irradiance in W/m², clamped to >= 0 (exactly
/// zero from the horizon down).
pub fn extraterrestrial_ghi(doy: u32, zenith: f64) -> f64 {
    if zenith >= 90.0 {
        return 0.0;
    }
    (SOLAR_CONSTANT * eccentricity_factor(doy) * zenith.to_radians().cos()).max(0.0)
}

/// Normal-incidence extraterrestrial irradiance for a date.
pub fn extraterrestrial_normal(date: NaiveDate) -> f64 {
    SOLAR_CONSTANT * eccentricity_factor(date.ordinal())
}

/// Built-in site preset: NREL Solar Radiation Research Laboratory, Golden CO.
pub const GOLDEN: SiteConfig = SiteConfig {
    latitude: 39.74,
    longitude: -105.18,
    elevation_m: 1828.8,
    utc_offset_hours: -7.0,
};

/// Built-in site preset: NELHA Ocean Science & Technology Park, Kailua-Kona HI.
pub const HAWAII: SiteConfig = SiteConfig {
    latitude: 19.72,
    longitude: -156.05,
    elevation_m: 4.0,
    utc_offset_hours: -10.0,
};

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(date: (i32, u32, u32), hm: (u32, u32)) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(date.0, date.1, date.2)
            .unwrap()
            .and_hms_opt(hm.0, hm.1, 0)
            .unwrap()
    }

    fn min_zenith_of_day(date: (i32, u32, u32), site: &SiteConfig) -> f64 {
        (0..1440)
            .map(|m| {
                solar_position(at(date, (m / 60, m % 60)), site)
                    .unwrap()
                    .zenith
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn equator_equinox_noon_is_overhead() {
        let site = SiteConfig {
            latitude: 0.0,
            longitude: 0.0,
            elevation_m: 0.0,
            utc_offset_hours: 0.0,
        };
        let min = (11 * 60..13 * 60)
            .map(|m| {
                solar_position(at((2017, 3, 20), (m / 60, m % 60)), &site)
                    .unwrap()
                    .zenith
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min <= 1.0, "equinox noon zenith {min}");
    }

    #[test]
    fn golden_midnight_sun_below_horizon() {
        let pos = solar_position(at((2017, 6, 21), (0, 30)), &GOLDEN).unwrap();
        assert!(pos.zenith > 90.0, "midnight zenith {}", pos.zenith);
    }

    #[test]
    fn golden_june_solstice_noon_zenith() {
        // independent oracle: |lat - solstice declination| = 39.74 - 23.44
        let min = min_zenith_of_day((2017, 6, 21), &GOLDEN);
        assert!((min - 16.3).abs() <= 0.5, "solstice noon zenith {min}");
    }

    #[test]
    fn zenith_is_continuous_minute_to_minute() {
        let mut prev: Option<f64> = None;
        for m in 0..1440 {
            let z = solar_position(at((2017, 2, 17), (m / 60, m % 60)), &GOLDEN)
                .unwrap()
                .zenith;
            if let Some(p) = prev {
                assert!((z - p).abs() < 0.3, "jump at minute {m}");
            }
            prev = Some(z);
        }
    }

    #[test]
    fn hemisphere_symmetry_at_solar_noon() {
        let south = SiteConfig {
            latitude: -GOLDEN.latitude,
            ..GOLDEN
        };
        let north_noon = min_zenith_of_day((2017, 6, 21), &GOLDEN);
        let south_noon = min_zenith_of_day((2017, 12, 21), &south);
        assert!(
            (north_noon - south_noon).abs() <= 1.0,
            "{north_noon} vs {south_noon}"
        );
    }

    #[test]
    fn azimuth_in_range_and_eastern_morning() {
        for m in (0..1440).step_by(7) {
            let pos = solar_position(at((2017, 2, 17), (m / 60, m % 60)), &GOLDEN).unwrap();
            assert!((0.0..360.0).contains(&pos.azimuth));
        }
        // mid-morning sun is east of south at a northern mid-latitude site
        let pos = solar_position(at((2017, 2, 17), (9, 0)), &GOLDEN).unwrap();
        assert!(pos.azimuth > 90.0 && pos.azimuth < 180.0, "{}", pos.azimuth);
    }

    #[test]
    fn earth_sun_factor_in_band() {
        for doy in 1..=365 {
            let f = eccentricity_factor(doy);
            assert!((0.966..=1.034).contains(&f));
        }
    }

    #[test]
    fn date_out_of_range_rejected() {
        let err = solar_position(at((1949, 12, 31), (12, 0)), &GOLDEN).unwrap_err();
        assert!(matches!(err, Error::DateOutOfRange(_)));
        assert!(solar_position(at((2101, 1, 1), (12, 0)), &GOLDEN).is_err());
    }

    #[test]
    fn invalid_site_rejected() {
        let bad = SiteConfig {
            latitude: 95.0,
            ..GOLDEN
        };
        assert!(matches!(
            solar_position(at((2017, 1, 1), (12, 0)), &bad),
            Err(Error::InvalidSite(_))
        ));
    }

    #[test]
    fn airmass_overhead_and_sixty_degrees() {
        let am0 = airmass(0.0, 0.0).unwrap();
        assert!((am0 - 1.0).abs() <= 0.001, "{am0}");
        let am60 = airmass(60.0, 0.0).unwrap();
        assert!((am60 - 1.994).abs() <= 0.01, "{am60}");
    }

    #[test]
    fn airmass_none_at_horizon_and_monotone() {
        assert!(airmass(90.0, 0.0).is_none());
        assert!(airmass(120.0, 0.0).is_none());
        let mut prev = 0.0;
        for z in 0..90 {
            let am = airmass(z as f64, 0.0).unwrap();
            assert!(am > prev, "airmass not increasing at zenith {z}");
            prev = am;
        }
    }

    #[test]
    fn airmass_pressure_correction_lowers_altitude_sites() {
        assert!(airmass(30.0, 1828.8).unwrap() < airmass(30.0, 0.0).unwrap());
    }

    #[test]
    fn extraterrestrial_examples() {
        assert_eq!(extraterrestrial_ghi(120, 90.0), 0.0);
        assert!((extraterrestrial_ghi(1, 0.0) - 1405.9).abs() <= 1.0);
        assert!((extraterrestrial_ghi(182, 0.0) - 1316.3).abs() <= 1.0);
    }

    #[test]
    fn extraterrestrial_nonnegative_and_periodic() {
        for doy in 1..=365u32 {
            for z in [0.0, 45.0, 89.0, 91.0, 180.0] {
                let v = extraterrestrial_ghi(doy, z);
                assert!(v >= 0.0);
                // 365-day periodicity to within 0.2%
                let next_year = extraterrestrial_ghi(doy + 365, z);
                assert!((v - next_year).abs() <= 0.002 * v.max(1.0));
            }
        }
    }
}
