use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{check_points, ClusterAssignment, ClusterParams};
use crate::error::{Error, Result};
use crate::numerics::{canonical_row_order, squared_distance, Matrix, SeededRng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 2,
            seed: 0,
            max_iter: 300,
            tol: 1e-8,
            restarts: 10,
        }
    }
}

struct Run<T> {
    labels: Vec<i32>,
    centroids: Matrix<T>,
    trace: Vec<f64>,
}

impl<T> Run<T> {
    fn inertia(&self) -> f64 {
        *self.trace.last().expect("at least one assignment step")
    }
}

/// k-means++ seeding followed by Lloyd iterations; the restart with the
/// lowest final inertia wins (earliest restart on ties).
pub fn kmeans_pp<T: Scalar>(x: &Matrix<T>, config: &KMeansConfig) -> Result<ClusterAssignment<T>> {
    check_points(x, "k-means")?;
    let n = x.rows();
    if config.k == 0 || config.k > n {
        return Err(Error::invalid(format!("k-means k must be in 1..={n}, got {}", config.k)));
    }
    if config.restarts == 0 || config.max_iter == 0 {
        return Err(Error::invalid("k-means needs at least one restart and one iteration"));
    }
    if !(config.tol >= 0.0) {
        return Err(Error::invalid(format!("k-means tolerance must be non-negative, got {}", config.tol)));
    }
    let order = canonical_row_order(x);
    let sorted = x.select_rows(&order);
    let root = SeededRng::new(config.seed);
    let runs: Vec<Run<T>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| lloyd(&sorted, config, &mut root.fork(r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia() < a.inertia() { b } else { a })
        .expect("at least one restart");

    let inertia = best.inertia();
    let mut labels = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        labels[i] = best.labels[r];
    }
    Ok(ClusterAssignment {
        labels,
        params: ClusterParams::Kmeans(config.clone()),
        centroids: Some(best.centroids),
        inertia: Some(inertia),
        inertia_trace: best.trace,
        merge_heights: Vec::new(),
    })
}

fn seed_centroids<T: Scalar>(x: &Matrix<T>, k: usize, rng: &mut SeededRng) -> Matrix<T> {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.index(n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first)).to_f64_lossy()).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            // guard against rounding leaving `chosen` on a zero-weight point
            if nearest[chosen] == 0.0 {
                chosen = nearest.iter().rposition(|&d| d > 0.0).expect("positive total");
            }
            chosen
        } else {
            rng.index(n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(pick)).to_f64_lossy());
        }
    }
    centroids
}

/// Nearest centroid per point (lowest index on ties) and squared distances.
fn assign<T: Scalar>(x: &Matrix<T>, centroids: &Matrix<T>) -> (Vec<i32>, Vec<f64>) {
    (0..x.rows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for c in 0..centroids.rows() {
                let d = squared_distance(x.row(i), centroids.row(c)).to_f64_lossy();
                if d < best.1 {
                    best = (c as i32, d);
                }
            }
            best
        })
        .unzip()
}

fn lloyd<T: Scalar>(x: &Matrix<T>, config: &KMeansConfig, rng: &mut SeededRng) -> Run<T> {
    let k = config.k;
    let mut centroids = seed_centroids(x, k, rng);
    let mut trace = Vec::new();
    for _ in 0..config.max_iter {
        let (labels, dists) = assign(x, &centroids);
        trace.push(dists.iter().sum());
        let mut next = super::cluster_means(x, &labels, k);
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l as usize] += 1);
        // an empty cluster restarts at the point worst served by its centroid
        let mut spare = dists;
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..spare.len())
                .fold(0, |b, i| if spare[i] > spare[b] { i } else { b });
            next.row_mut(c).copy_from_slice(x.row(far));
            spare[far] = 0.0;
        }
        let shift = (0..k)
            .map(|c| squared_distance(next.row(c), centroids.row(c)).to_f64_lossy())
            .fold(0.0, f64::max)
            .sqrt();
        centroids = next;
        if shift <= config.tol {
            break;
        }
    }
    let (labels, dists) = assign(x, &centroids);
    trace.push(dists.iter().sum());
    Run {
        labels,
        centroids,
        trace,
    }
}
