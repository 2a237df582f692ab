//! Property tests over the spec's module invariants.

use chrono::NaiveDate;
use proptest::prelude::*;

use suncluster::clearsky::ClearSkyDay;
use suncluster::cluster::{kmeans, KMeansParams};
use suncluster::distance::{dtw, euclidean, manhattan, ProfileVector};
use suncluster::features::{beta, sunshine_duration};
use suncluster::ingest::{clean_day, DayRecord, QualityPolicy};
use suncluster::quality::{calinski_harabasz, davies_bouldin, silhouette_points};
use suncluster::MINUTES_PER_DAY;

fn profile(values: Vec<f64>) -> ProfileVector {
    ProfileVector { values, policy_id: "prop".into() }
}

fn day_from(values: Vec<Option<f64>>) -> DayRecord {
    DayRecord {
        date: NaiveDate::from_ymd_opt(2017, 3, 1).unwrap(),
        ghi_availability: values.iter().filter(|v| v.is_some()).count() as f64
            / values.len() as f64,
        ghi: values,
        cloud_cover: None,
        cloud_availability: None,
    }
}

prop_compose! {
    fn ghi_series(max_len: usize)(values in prop::collection::vec(-50.0..1200.0f64, 1..=max_len)) -> Vec<f64> {
        values
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dtw_is_symmetric_and_bounded_by_euclidean(
        a in ghi_series(24),
        b in ghi_series(24),
    ) {
        let ab = dtw(&profile(a.clone()), &profile(b.clone()), None).unwrap();
        let ba = dtw(&profile(b.clone()), &profile(a.clone()), None).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        if a.len() == b.len() {
            let e = euclidean(&profile(a), &profile(b)).unwrap();
            prop_assert!(ab <= e + 1e-9);
        }
    }

    #[test]
    fn widening_the_band_never_increases_dtw(
        a in ghi_series(16),
        b in ghi_series(16),
    ) {
        let diff = a.len().abs_diff(b.len());
        let mut prev = f64::INFINITY;
        for band in diff..=a.len().max(b.len()) {
            let d = dtw(&profile(a.clone()), &profile(b.clone()), Some(band)).unwrap();
            prop_assert!(d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn manhattan_satisfies_the_triangle_inequality(
        a in prop::collection::vec(-100.0..100.0f64, 8),
        b in prop::collection::vec(-100.0..100.0f64, 8),
        c in prop::collection::vec(-100.0..100.0f64, 8),
    ) {
        let ab = manhattan(&profile(a.clone()), &profile(b.clone())).unwrap();
        let bc = manhattan(&profile(b), &profile(c.clone())).unwrap();
        let ac = manhattan(&profile(a), &profile(c)).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn kmeans_is_reproducible_from_its_seed(
        raw in prop::collection::vec(-100.0..100.0f64, 6..40),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= raw.len());
        let points: Vec<Vec<f64>> = raw.iter().map(|&x| vec![x]).collect();
        let params = KMeansParams { seed, ..Default::default() };
        let first = kmeans(&points, k, &params).unwrap();
        let second = kmeans(&points, k, &params).unwrap();
        prop_assert_eq!(&first.labels, &second.labels);
        prop_assert_eq!(first.inertia.to_bits(), second.inertia.to_bits());
    }

    #[test]
    fn quality_scores_ignore_label_permutation(
        raw in prop::collection::vec(-100.0..100.0f64, 9..30),
    ) {
        let points: Vec<Vec<f64>> = raw.iter().map(|&x| vec![x]).collect();
        let labels: Vec<usize> = (0..points.len()).map(|i| i % 3).collect();
        let permuted: Vec<usize> = labels.iter().map(|&l| (l + 1) % 3).collect();

        let s1 = silhouette_points(&points, &labels).unwrap();
        let s2 = silhouette_points(&points, &permuted).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-12);

        let c1 = calinski_harabasz(&points, &labels).unwrap();
        let c2 = calinski_harabasz(&points, &permuted).unwrap();
        prop_assert!(c1.is_infinite() && c2.is_infinite() || (c1 - c2).abs() <= 1e-9 * c1.abs().max(1.0));

        let d1 = davies_bouldin(&points, &labels).unwrap();
        let d2 = davies_bouldin(&points, &permuted).unwrap();
        prop_assert!(d1.is_infinite() && d2.is_infinite() || (d1 - d2).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clean_day_is_idempotent_and_monotone_in_threshold(
        seed_values in prop::collection::vec(prop::option::weighted(0.93, 0.0..900.0f64), MINUTES_PER_DAY),
        loose in 0.05..0.5f64,
        strict_extra in 0.0..0.45f64,
    ) {
        let day = day_from(seed_values);
        let policy = QualityPolicy::default();
        if let Ok(once) = clean_day(&day, &policy) {
            let twice = clean_day(&once, &policy).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.ghi.iter().all(|v| v.is_some_and(|x| x >= 0.0 && x.is_finite())));
        }

        // a day accepted at a stricter threshold is accepted at a looser one
        let strict_policy = QualityPolicy { min_availability: loose + strict_extra, ..policy };
        let loose_policy = QualityPolicy { min_availability: loose, ..policy };
        if clean_day(&day, &strict_policy).is_ok() {
            prop_assert!(clean_day(&day, &loose_policy).is_ok());
        }
    }

    #[test]
    fn beta_is_scale_invariant_and_sunshine_monotone(
        scale in 0.0..1.5f64,
        factor_exp in -3.0..3.0f64,
        peak in 200.0..1100.0f64,
    ) {
        let date = NaiveDate::from_ymd_opt(2017, 3, 1).unwrap();
        let csi: Vec<f64> = (0..MINUTES_PER_DAY)
            .map(|m| {
                let x = (m as f64 - 720.0) / 300.0;
                (peak * (1.0 - x * x)).max(0.0)
            })
            .collect();
        let measured: Vec<f64> = csi.iter().map(|v| v * scale).collect();
        let factor = 10f64.powf(factor_exp);

        let base = beta(
            &day_from(measured.iter().copied().map(Some).collect()),
            &ClearSkyDay { date, csi: csi.clone() },
        ).unwrap();
        let scaled = beta(
            &day_from(measured.iter().map(|v| Some(v * factor)).collect()),
            &ClearSkyDay { date, csi: csi.iter().map(|v| v * factor).collect() },
        ).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12);

        let cs = ClearSkyDay { date, csi };
        let mut prev = u32::MAX;
        for threshold in [0.0, 1.0, 50.0, 400.0, 1200.0] {
            let s = sunshine_duration(&cs, threshold);
            prop_assert!(s <= prev);
            prev = s;
        }
    }
}
