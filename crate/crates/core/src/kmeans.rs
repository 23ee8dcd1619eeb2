//! Seeded one-dimensional k-means.
//!
//! Initialization is k-means++ driven by ChaCha8 (`rand_chacha::ChaCha8Rng`
//! seeded with `seed_from_u64(seed)`), followed by Lloyd iterations. Centroids
//! are kept in ascending order and assignment ties go to the lower centroid.
//! If the data holds fewer distinct values than `k`, only as many centroids
//! as there are distinct values are created.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    /// Ascending centroids, one per cluster that was seeded.
    pub centroids: Vec<f64>,
    /// Cluster index (into `centroids`) for each value.
    pub assignments: Vec<u8>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances: first the seeding assignment, then one
    /// entry per accepted Lloyd update.
    pub objective_history: Vec<f64>,
}

impl KMeans1d {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

fn seed_centroids(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = values.len();
    let mut centroids = vec![values[rng.random_range(0..n)]];
    let mut dist2: Vec<f64> = values
        .iter()
        .map(|v| (v - centroids[0]) * (v - centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, d) in dist2.iter().enumerate() {
            if *d <= 0.0 {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        // `pick` is the last positive-distance index when rounding leaves
        // `acc` a hair below `target`.
        let c = values[pick.expect("positive total implies a positive entry")];
        centroids.push(c);
        for (d, v) in dist2.iter_mut().zip(values) {
            *d = d.min((v - c) * (v - c));
        }
    }
    centroids.sort_by(f64::total_cmp);
    centroids
}

fn assign(values: &[f64], centroids: &[f64]) -> Vec<u8> {
    values
        .par_iter()
        .map(|v| {
            let mut best = 0usize;
            let mut best_d = (v - centroids[0]).abs();
            for (j, c) in centroids.iter().enumerate().skip(1) {
                let d = (v - c).abs();
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best as u8
        })
        .collect()
}

fn objective(values: &[f64], centroids: &[f64], assignments: &[u8]) -> f64 {
    values
        .iter()
        .zip(assignments)
        .map(|(v, &a)| {
            let d = v - centroids[a as usize];
            d * d
        })
        .sum()
}

pub fn kmeans_1d(
    values: &[f64],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeans1d> {
    if values.is_empty() {
        return Err(Error::EmptyImage {
            width: 0,
            height: 0,
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "k-means input",
            index,
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    assert!(
        (1..=u8::MAX as usize).contains(&k),
        "cluster count out of range"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(values, k, &mut rng);
    let mut assignments = assign(values, &centroids);
    let mut history = vec![objective(values, &centroids, &assignments)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        let m = centroids.len();
        let mut sums = vec![0.0; m];
        let mut counts = vec![0usize; m];
        for (v, &a) in values.iter().zip(&assignments) {
            sums[a as usize] += v;
            counts[a as usize] += 1;
        }
        let updated: Vec<f64> = centroids
            .iter()
            .zip(sums.iter().zip(&counts))
            .map(|(&old, (&s, &c))| if c == 0 { old } else { s / c as f64 })
            .collect();
        let movement = updated
            .iter()
            .zip(&centroids)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let obj = objective(values, &updated, &assignments);
        // The cluster mean minimizes the objective exactly; a rise can only
        // be rounding in the mean, so keep the current centroids and stop.
        if obj > *history.last().expect("seeded objective") {
            converged = true;
            break;
        }
        history.push(obj);
        centroids = updated;

        let reassigned = assign(values, &centroids);
        let stable = reassigned == assignments;
        assignments = reassigned;
        if stable || movement < tol {
            converged = true;
            break;
        }
    }

    // Lloyd keeps 1-D centroids ordered; sort anyway and remap so the
    // ascending contract holds even for pathological inputs.
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        centroids = order.iter().map(|&i| centroids[i]).collect();
        assignments = assign(values, &centroids);
    }

    Ok(KMeans1d {
        centroids,
        assignments,
        iterations,
        converged,
        objective_history: history,
    })
}
