//! Cluster validity scores: Silhouette, Calinski-Harabasz, Davies-Bouldin.
//!
//! Silhouette accepts either a precomputed distance matrix or a feature
//! matrix (through the induced Euclidean distances); the two entry points
//! agree. CH and DB need a vector space and are computed on feature
//! matrices.

use serde::{Deserialize, Serialize};

use crate::distance::{pairwise_matrix, DistanceMatrix, MetricTag, ProfileVector};
use crate::{Error, Result};

/// Which space the scores were evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QualitySpace {
    FeatureSpace,
    DistanceMatrix,
}

/// The three validity scores for one clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    /// Mean silhouette coefficient, in [-1, 1].
    pub silhouette: f64,
    /// Variance-ratio criterion, >= 0 (infinity sentinel when W = 0).
    pub calinski_harabasz: f64,
    /// Mean worst-case cluster similarity, >= 0 (infinity sentinel for
    /// coincident centroids).
    pub davies_bouldin: f64,
    pub space: QualitySpace,
}

fn cluster_count(labels: &[usize]) -> Result<usize> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::LabelMismatch(format!("cluster {empty} is empty")));
    }
    Ok(k)
}

/// Mean silhouette coefficient over items, from a distance matrix.
///
/// Per item: a = mean intra-cluster distance (excluding self), b = least
/// mean distance to another cluster, s = (b - a) / max(a, b). Singleton
/// clusters contribute 0.
pub fn silhouette(labels: &[usize], dist: &DistanceMatrix) -> Result<f64> {
    if labels.len() != dist.n() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} items",
            labels.len(),
            dist.n()
        )));
    }
    let k = cluster_count(labels)?;
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let clusters: Vec<Vec<usize>> = (0..k)
        .map(|c| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == c)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if clusters[label].len() == 1 {
            continue; // singleton contributes 0
        }
        let a = dist.mean_to(i, &clusters[label]);
        let b = (0..k)
            .filter(|&c| c != label)
            .map(|c| dist.mean_to(i, &clusters[c]))
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / labels.len() as f64)
}

/// Silhouette from a feature matrix via the induced Euclidean distances.
pub fn silhouette_points(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let profiles: Vec<ProfileVector> = points
        .iter()
        .map(|p| ProfileVector { values: p.clone(), policy_id: "points".into() })
        .collect();
    let dates: Vec<chrono::NaiveDate> = (0..points.len())
        .map(|i| {
            chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(i as i64)
        })
        .collect();
    let dist = pairwise_matrix(&profiles, &dates, MetricTag::Euclidean, None)?;
    silhouette(labels, &dist)
}

fn centroid(points: &[Vec<f64>], items: &[usize]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for &i in items {
        for (acc, v) in c.iter_mut().zip(&points[i]) {
            *acc += v;
        }
    }
    for v in c.iter_mut() {
        *v /= items.len() as f64;
    }
    c
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Calinski-Harabasz variance-ratio: (B/(k-1)) / (W/(n-k)).
///
/// W = 0 with separated centroids reports an infinity sentinel.
pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    let n = points.len();
    let k = cluster_count(labels)?;
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let all: Vec<usize> = (0..n).collect();
    let grand = centroid(points, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let center = centroid(points, &members);
        let offset = euclid(&center, &grand);
        between += members.len() as f64 * offset * offset;
        for &i in &members {
            let d = euclid(&points[i], &center);
            within += d * d;
        }
    }
    if within == 0.0 {
        if between == 0.0 {
            return Ok(0.0);
        }
        log::warn!("zero within-cluster dispersion; Calinski-Harabasz is infinite");
        return Ok(f64::INFINITY);
    }
    if k == n {
        log::warn!("k = n leaves no within-cluster degrees of freedom");
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Davies-Bouldin: mean over clusters of max (S_i + S_j) / M_ij.
///
/// Coincident centroids report an infinity sentinel.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    let n = points.len();
    let k = cluster_count(labels)?;
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let mut centers = Vec::with_capacity(k);
    let mut spreads = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let center = centroid(points, &members);
        let spread =
            members.iter().map(|&i| euclid(&points[i], &center)).sum::<f64>() / members.len() as f64;
        centers.push(center);
        spreads.push(spread);
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let separation = euclid(&centers[i], &centers[j]);
            if separation == 0.0 {
                log::warn!("coincident centroids {i} and {j}; Davies-Bouldin is infinite");
                return Ok(f64::INFINITY);
            }
            worst = worst.max((spreads[i] + spreads[j]) / separation);
        }
        total += worst;
    }
    Ok(total / k as f64)
}
