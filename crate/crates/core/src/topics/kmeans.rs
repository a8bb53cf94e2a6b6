//! Lloyd's k-means with k-means++ seeding.
//!
//! Assignment ties go to the lowest centroid index. A centroid left without
//! members after an update is moved onto the point currently farthest from
//! its own centroid (ties: lowest point index), which keeps the run
//! deterministic and never increases the objective.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iters: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions { max_iters: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicClusters {
    pub k: usize,
    /// Cluster id per input vector.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances at termination.
    pub objective: f64,
    /// Objective after each assignment step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_seeds(vectors: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    let n = vectors.len();
    let mut centroids = vec![vectors[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass is on existing centroids: take the first
            // point not already chosen as a centroid.
            (0..n)
                .find(|&i| !centroids.iter().any(|c| c == &vectors[i]))
                .unwrap_or(0)
        } else {
            let mut u = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        };
        centroids.push(vectors[next].clone());
        for (i, v) in vectors.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(v, &vectors[next]));
        }
    }
    centroids
}

pub fn kmeans(
    vectors: &[Vec<f64>],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<TopicClusters, TopicError> {
    if k == 0 {
        return Err(TopicError::ZeroK);
    }
    if k > vectors.len() {
        return Err(TopicError::KTooLarge {
            k,
            n: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
        return Err(TopicError::DimensionMismatch(bad));
    }

    let mut centroids = plus_plus_seeds(vectors, k, seed);
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iters.max(1) {
        iterations += 1;
        let step: Vec<(usize, f64)> = vectors.par_iter().map(|v| nearest(v, &centroids)).collect();
        let new_assignments: Vec<usize> = step.iter().map(|s| s.0).collect();
        let objective: f64 = step.iter().map(|s| s.1).sum();
        if let Some(&prev) = trace.last() {
            debug_assert!(
                objective <= prev + 1e-9 * prev.abs().max(1.0),
                "k-means objective increased: {prev} -> {objective}"
            );
        }
        trace.push(objective);
        if new_assignments == assignments {
            converged = true;
            break;
        }
        assignments = new_assignments;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(v) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..vectors.len())
                    .map(|i| (i, sq_dist(&vectors[i], &centroids[assignments[i]])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                log::debug!("re-seeding empty cluster {c} at point {far}");
                centroids[c] = vectors[far].clone();
                let old = assignments[far];
                counts[old] -= 1;
                counts[c] = 1;
                assignments[far] = c;
            }
        }
    }

    let objective = *trace.last().unwrap_or(&0.0);
    let assignments = if assignments.is_empty() {
        vectors.iter().map(|v| nearest(v, &centroids).0).collect()
    } else {
        assignments
    };
    Ok(TopicClusters {
        k,
        assignments,
        centroids,
        objective,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Final objective for each k, to help choose k by eye.
pub fn elbow_curve(
    vectors: &[Vec<f64>],
    ks: impl IntoIterator<Item = usize>,
    seed: u64,
) -> Result<Vec<(usize, f64)>, TopicError> {
    ks.into_iter()
        .map(|k| kmeans(vectors, k, seed, KMeansOptions::default()).map(|c| (k, c.objective)))
        .collect()
}
