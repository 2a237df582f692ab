//! Seeded, deterministic clustering engines: K-Means (Lloyd iterations from
//! K-Means++ seeding, multi-restart) over feature vectors, and K-Medoids
//! (PAM BUILD + SWAP) over a precomputed distance matrix.
//!
//! All tie-breaking is by lowest index, so results are bit-identical for a
//! given seed across runs and thread counts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::DistanceMatrix;
use crate::{Error, Result};

/// Cluster centers: mean vectors for K-Means, member indices for K-Medoids.
#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    Means(Vec<Vec<f64>>),
    Medoids(Vec<usize>),
}

/// A finished clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Per-item cluster index in `[0, k)`; every cluster is non-empty.
    pub labels: Vec<usize>,
    pub centers: Centers,
    /// K-Means: total within-cluster squared distance. K-Medoids: total
    /// distance of items to their medoid.
    pub inertia: f64,
    pub seed: u64,
    pub iterations: usize,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// K-Means tuning knobs; the spec defaults.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansParams {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { restarts: 10, tol: 1e-6, max_iter: 300, seed: 42 }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd K-Means with K-Means++ initialization; returns the lowest-inertia
/// assignment among `params.restarts` independent runs (ties to the earliest
/// restart). Fully reproducible from `params.seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, params: &KMeansParams) -> Result<ClusterAssignment> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteInput);
    }
    let restarts = params.restarts.max(1);
    let runs: Vec<(usize, ClusterAssignment)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(r as u64);
            (r, lloyd_run(points, k, params, &mut rng))
        })
        .collect();
    let mut best = None;
    for (r, mut run) in runs {
        run.seed = params.seed;
        match &best {
            None => best = Some((r, run)),
            Some((_, b)) if run.inertia < b.inertia => best = Some((r, run)),
            _ => {}
        }
    }
    Ok(best.expect("restarts >= 1").1)
}

fn lloyd_run(
    points: &[Vec<f64>],
    k: usize,
    params: &KMeansParams,
    rng: &mut ChaCha8Rng,
) -> ClusterAssignment {
    let n = points.len();
    let mut centers = kmeanspp_init(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    let mut previous_inertia = f64::INFINITY;

    for _ in 0..params.max_iter.max(1) {
        iterations += 1;
        assign(points, &centers, &mut labels);
        repair_empty_clusters(points, &centers, &mut labels, k);

        let new_centers = means(points, &labels, k, &centers);
        let movement: f64 = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| squared_distance(a, b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = new_centers
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        centers = new_centers;

        let inertia = total_inertia(points, &labels, &centers);
        debug_assert!(
            inertia <= previous_inertia * (1.0 + 1e-9) + 1e-12,
            "inertia rose from {previous_inertia} to {inertia}"
        );
        previous_inertia = inertia;

        if movement <= params.tol * (1.0 + scale) {
            break;
        }
    }

    // final labels against the final centers
    assign(points, &centers, &mut labels);
    repair_empty_clusters(points, &centers, &mut labels, k);
    let centers = means(points, &labels, k, &centers);
    let inertia = total_inertia(points, &labels, &centers);
    ClusterAssignment {
        k,
        labels,
        centers: Centers::Means(centers),
        inertia,
        seed: 0,
        iterations,
    }
}

/// K-Means++: first center uniform, then sample proportional to the squared
/// distance to the nearest chosen center.
fn kmeanspp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            // all remaining mass is zero (duplicate points); pick uniformly
            rng.gen_range(0..n)
        };
        centers.push(points[chosen].clone());
        for (d, p) in dist2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centers.last().unwrap()));
        }
    }
    centers
}

/// Nearest-center assignment, ties to the lowest center index.
fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) {
    for (label, point) in labels.iter_mut().zip(points) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = squared_distance(point, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
    }
}

/// Give each empty cluster the point currently farthest from its own center.
fn repair_empty_clusters(
    points: &[Vec<f64>],
    centers: &[Vec<f64>],
    labels: &mut [usize],
    k: usize,
) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut worst = 0;
        let mut worst_d = -1.0;
        for (i, point) in points.iter().enumerate() {
            if sizes[labels[i]] <= 1 {
                continue; // do not empty another cluster
            }
            let d = squared_distance(point, &centers[labels[i]]);
            if d > worst_d {
                worst_d = d;
                worst = i;
            }
        }
        labels[worst] = empty;
    }
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, fallback: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (point, &label) in points.iter().zip(labels) {
        counts[label] += 1;
        for (s, v) in sums[label].iter_mut().zip(point) {
            *s += v;
        }
    }
    for (c, (sum, &count)) in sums.iter_mut().zip(&counts).enumerate() {
        if count == 0 {
            sum.clone_from(&fallback[c]);
        } else {
            for v in sum.iter_mut() {
                *v /= count as f64;
            }
        }
    }
    sums
}

fn total_inertia(points: &[Vec<f64>], labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centers[l]))
        .sum()
}

/// SWAP starts beyond the deterministic BUILD one; greedy single-swap
/// descent can stall in a local optimum on non-metric matrices.
const PAM_RESTARTS: usize = 10;

/// PAM K-Medoids over a precomputed distance matrix: SWAP passes (accepting
/// the best strictly-improving medoid/non-medoid swap) run from the greedy
/// BUILD initialization and from seeded random initializations; the
/// lowest-cost run wins, earliest start on ties.
///
/// Deterministic given `seed`; index ties go to the lowest index.
pub fn kmedoids(
    dist: &DistanceMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    let n = dist.n();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }

    let mut starts: Vec<Vec<usize>> = vec![pam_build(dist, k)];
    for r in 1..PAM_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        starts.push(sample_distinct(n, k, &mut rng));
    }

    let runs: Vec<(Vec<usize>, usize)> = starts
        .into_par_iter()
        .map(|start| pam_swap(dist, start, max_iter))
        .collect();
    let (medoids, iterations) = runs
        .into_iter()
        .min_by(|a, b| {
            medoid_cost(dist, &a.0)
                .partial_cmp(&medoid_cost(dist, &b.0))
                .unwrap()
        })
        .expect("at least one start");

    let labels: Vec<usize> = (0..n).map(|i| nearest_medoid(dist, &medoids, i)).collect();
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist.get(i, medoids[l]))
        .sum();
    Ok(ClusterAssignment {
        k,
        labels,
        centers: Centers::Medoids(medoids),
        inertia,
        seed,
        iterations,
    })
}

/// First k of a seeded partial Fisher-Yates shuffle of 0..n.
fn sample_distinct(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}

/// Best-improvement SWAP descent; returns the medoids and pass count.
fn pam_swap(dist: &DistanceMatrix, mut medoids: Vec<usize>, max_iter: usize) -> (Vec<usize>, usize) {
    let n = dist.n();
    let k = medoids.len();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let current_cost = medoid_cost(dist, &medoids);
        let mut best_swap: Option<(usize, usize, f64)> = None;
        for m in 0..k {
            for candidate in 0..n {
                if medoids.contains(&candidate) {
                    continue;
                }
                let saved = medoids[m];
                medoids[m] = candidate;
                let cost = medoid_cost(dist, &medoids);
                medoids[m] = saved;
                if cost < current_cost - 1e-15
                    && best_swap.is_none_or(|(_, _, c)| cost < c)
                {
                    best_swap = Some((m, candidate, cost));
                }
            }
        }
        match best_swap {
            Some((m, candidate, _)) => medoids[m] = candidate,
            None => break,
        }
    }
    (medoids, iterations)
}

/// Greedy BUILD: each new medoid is the point that lowers total cost most.
fn pam_build(dist: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = dist.n();
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    while medoids.len() < k {
        let mut best = usize::MAX;
        let mut best_cost = f64::INFINITY;
        for candidate in 0..n {
            if medoids.contains(&candidate) {
                continue;
            }
            let cost: f64 = (0..n).map(|i| nearest[i].min(dist.get(i, candidate))).sum();
            if cost < best_cost {
                best_cost = cost;
                best = candidate;
            }
        }
        medoids.push(best);
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(dist.get(i, best));
        }
    }
    medoids
}

fn nearest_medoid(dist: &DistanceMatrix, medoids: &[usize], item: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &m) in medoids.iter().enumerate() {
        let d = dist.get(item, m);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn medoid_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.n())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| dist.get(i, m))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::MetricTag;
    use chrono::NaiveDate;

    fn matrix_from(n: usize, mut d: impl FnMut(usize, usize) -> f64) -> DistanceMatrix {
        let dates: Vec<NaiveDate> = (0..n)
            .map(|i| {
                NaiveDate::from_ymd_opt(2017, 1, 1).unwrap() + chrono::Duration::days(i as i64)
            })
            .collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = d(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        DistanceMatrix::new(MetricTag::Euclidean, dates, values).unwrap()
    }

    fn one_d(points: &[f64]) -> Vec<Vec<f64>> {
        points.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn kmeans_separated_duplicates() {
        let points = one_d(&[0.0, 0.0, 10.0, 10.0]);
        let result = kmeans(&points, 2, &KMeansParams::default()).unwrap();
        assert_eq!(result.labels[0], result.labels[1]);
        assert_eq!(result.labels[2], result.labels[3]);
        assert_ne!(result.labels[0], result.labels[2]);
        let Centers::Means(centers) = &result.centers else { panic!() };
        let mut values: Vec<f64> = centers.iter().map(|c| c[0]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(values, vec![0.0, 10.0]);
        assert_eq!(result.inertia, 0.0);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let points = one_d(&[1.0, 5.0, 9.0, 13.0]);
        let result = kmeans(&points, 4, &KMeansParams::default()).unwrap();
        assert_eq!(result.inertia, 0.0);
        let mut sorted = result.labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kmeans_rejects_bad_input() {
        assert!(matches!(
            kmeans(&one_d(&[1.0]), 2, &KMeansParams::default()),
            Err(Error::InvalidClusterCount { k: 2, n: 1 })
        ));
        assert!(matches!(
            kmeans(&one_d(&[1.0, f64::NAN]), 1, &KMeansParams::default()),
            Err(Error::NonFiniteInput)
        ));
    }

    /// Exhaustive optimum over contiguous partitions of the sorted points
    /// (optimal 1-D k-means clusters are contiguous in sorted order).
    fn brute_force_1d_inertia(points: &[f64], k: usize) -> f64 {
        fn segment_cost(sorted: &[f64]) -> f64 {
            let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
            sorted.iter().map(|x| (x - mean) * (x - mean)).sum()
        }
        fn recurse(sorted: &[f64], k: usize) -> f64 {
            if k == 1 {
                return segment_cost(sorted);
            }
            let mut best = f64::INFINITY;
            // first segment takes 1..=len-(k-1) points
            for cut in 1..=sorted.len() - (k - 1) {
                let cost = segment_cost(&sorted[..cut]) + recurse(&sorted[cut..], k - 1);
                if cost < best {
                    best = cost;
                }
            }
            best
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        recurse(&sorted, k)
    }

    #[test]
    fn kmeans_reaches_1d_optimum() {
        let mut state = 2024u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 20.0
        };
        for trial in 0..25 {
            let n = 6 + (trial % 7);
            let k = 1 + (trial % 3);
            let raw: Vec<f64> = (0..n).map(|_| next()).collect();
            let result = kmeans(
                &one_d(&raw),
                k,
                &KMeansParams { restarts: 25, seed: trial as u64, ..Default::default() },
            )
            .unwrap();
            let optimum = brute_force_1d_inertia(&raw, k);
            assert!(
                (result.inertia - optimum).abs() <= 1e-9,
                "trial {trial}: {} vs {optimum}",
                result.inertia
            );
        }
    }

    #[test]
    fn kmeans_same_seed_identical_labels() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 11) as f64])
            .collect();
        let params = KMeansParams { seed: 9, ..Default::default() };
        let a = kmeans(&points, 3, &params).unwrap();
        let b = kmeans(&points, 3, &params).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn kmeans_centers_are_member_means() {
        let points = one_d(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 30.0]);
        let result = kmeans(&points, 3, &KMeansParams::default()).unwrap();
        let Centers::Means(centers) = &result.centers else { panic!() };
        for (c, center) in centers.iter().enumerate() {
            let members = result.members(c);
            assert!(!members.is_empty());
            let mean =
                members.iter().map(|&i| points[i][0]).sum::<f64>() / members.len() as f64;
            assert!((center[0] - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn kmedoids_k_equals_n() {
        let m = matrix_from(4, |i, j| (i + j) as f64);
        let result = kmedoids(&m, 4, 0, 100).unwrap();
        assert_eq!(result.inertia, 0.0);
        let Centers::Medoids(medoids) = &result.centers else { panic!() };
        let mut sorted = medoids.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kmedoids_two_far_pairs() {
        // items 0,1 close together; 2,3 close together; pairs far apart
        let m = matrix_from(4, |i, j| match (i, j) {
            (0, 1) | (2, 3) => 1.0,
            _ => 50.0,
        });
        let result = kmedoids(&m, 2, 0, 100).unwrap();
        assert_eq!(result.labels[0], result.labels[1]);
        assert_eq!(result.labels[2], result.labels[3]);
        assert_ne!(result.labels[0], result.labels[2]);
        assert_eq!(result.inertia, 2.0);
    }

    #[test]
    fn kmedoids_rejects_bad_k() {
        let m = matrix_from(3, |_, _| 1.0);
        assert!(matches!(
            kmedoids(&m, 4, 0, 10),
            Err(Error::InvalidClusterCount { k: 4, n: 3 })
        ));
    }

    fn brute_force_medoid_pair(dist: &DistanceMatrix) -> f64 {
        let n = dist.n();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                let cost: f64 = (0..n).map(|i| dist.get(i, a).min(dist.get(i, b))).sum();
                if cost < best {
                    best = cost;
                }
            }
        }
        best
    }

    #[test]
    fn kmedoids_matches_exhaustive_pairs() {
        let mut state = 77u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(11);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 9.0 + 0.1
        };
        for trial in 0..25 {
            let n = 4 + (trial % 5);
            let m = matrix_from(n, |_, _| next());
            let result = kmedoids(&m, 2, 0, 100).unwrap();
            let optimum = brute_force_medoid_pair(&m);
            assert!(
                (result.inertia - optimum).abs() <= 1e-12,
                "trial {trial}: {} vs {optimum}",
                result.inertia
            );
        }
    }

    #[test]
    fn kmedoids_medoids_are_one_medoid_optimal() {
        let m = matrix_from(9, |i, j| ((i * 13 + j * 7) % 17) as f64 + 1.0);
        let result = kmedoids(&m, 3, 0, 100).unwrap();
        let Centers::Medoids(medoids) = &result.centers else { panic!() };
        for (c, &medoid) in medoids.iter().enumerate() {
            let members = result.members(c);
            assert!(members.contains(&medoid), "medoid outside its cluster");
            let current: f64 = members.iter().map(|&i| m.get(i, medoid)).sum();
            for &candidate in &members {
                let cost: f64 = members.iter().map(|&i| m.get(i, candidate)).sum();
                assert!(cost >= current - 1e-12, "better medoid {candidate} exists");
            }
        }
    }
}
