//! Deterministic synthetic minute-CSV fixture generator, used by the
//! integration tests and handy for demo runs without station data.

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clearsky::{clearsky_day, TurbidityTable};
use crate::solar::SiteConfig;
use crate::{Result, MINUTES_PER_DAY};

/// What to synthesize.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub site: SiteConfig,
    pub start: NaiveDate,
    pub n_days: usize,
    pub seed: u64,
    /// Emit a cloud-cover column alongside GHI.
    pub with_cloud: bool,
}

impl SyntheticSpec {
    pub fn new(site: SiteConfig, start: NaiveDate, n_days: usize, seed: u64) -> Self {
        Self { site, start, n_days, seed, with_cloud: true }
    }
}

/// Generate a raw minute CSV (`timestamp,ghi,cloud_cover`) with a seeded mix
/// of clear, mixed, and overcast days plus a few data-quality defects: some
/// negative night readings, short gaps, and one day sparse enough to fail
/// the availability gate.
pub fn generate_csv(spec: &SyntheticSpec) -> Result<String> {
    let table = TurbidityTable::uniform(3.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = String::with_capacity(spec.n_days * MINUTES_PER_DAY * 24);
    if spec.with_cloud {
        out.push_str("timestamp,ghi,cloud_cover\n");
    } else {
        out.push_str("timestamp,ghi\n");
    }

    for day_index in 0..spec.n_days {
        let date = spec.start + chrono::Duration::days(day_index as i64);
        let clearsky = clearsky_day(date, &spec.site, &table)?;
        // day archetype: clear / mixed / overcast in a repeating seeded mix
        let archetype = rng.gen_range(0..3u8);
        let (base_scale, base_cloud): (f64, f64) = match archetype {
            0 => (rng.gen_range(0.93..1.04), rng.gen_range(0.0..12.0)),
            1 => (rng.gen_range(0.55..0.80), rng.gen_range(35.0..65.0)),
            _ => (rng.gen_range(0.12..0.32), rng.gen_range(85.0..100.0)),
        };
        let sparse_day = day_index == 13; // fails the 90% availability gate
        let gap_start = rng.gen_range(600..800usize);
        let gap_len = rng.gen_range(3..20usize);

        for minute in 0..MINUTES_PER_DAY {
            let timestamp = format!(
                "{date} {:02}:{:02}",
                minute / 60,
                minute % 60
            );
            if sparse_day && minute % 4 == 0 {
                // one sparse day: a quarter of the minutes missing entirely
                out.push_str(&timestamp);
                out.push(',');
                if spec.with_cloud {
                    out.push(',');
                }
                out.push('\n');
                continue;
            }
            let csi = clearsky.csi[minute];
            let ghi_cell = if (gap_start..gap_start + gap_len).contains(&minute) {
                String::new() // short interior gap, interpolated by cleaning
            } else if csi == 0.0 {
                // night: small sensor offset, occasionally negative
                if minute % 173 == 0 {
                    "-2.0".to_string()
                } else {
                    "0.0".to_string()
                }
            } else {
                let flicker = 1.0 + 0.05 * (minute as f64 / 37.0).sin();
                let dip = if archetype == 1 && rng.gen_bool(0.15) {
                    rng.gen_range(0.3..0.8)
                } else {
                    1.0
                };
                format!("{:.3}", csi * base_scale * flicker * dip)
            };
            out.push_str(&timestamp);
            out.push(',');
            out.push_str(&ghi_cell);
            if spec.with_cloud {
                let jitter = rng.gen_range(-4.0..4.0);
                let cc: f64 = (base_cloud + jitter).clamp(0.0, 100.0);
                out.push(',');
                out.push_str(&format!("{cc:.1}"));
            }
            out.push('\n');
        }
    }
    Ok(out)
}
