//! Cluster assignment over latent vectors or their projections: k-means++
//! with Lloyd refinement, agglomerative clustering, and DBSCAN.
//!
//! As with the projections, each method works on content-sorted rows, so
//! permuting the input permutes the labels and leaves cluster ids alone.

mod dbscan;
mod hierarchical;
mod kmeans;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub use dbscan::{dbscan, default_dbscan_eps, DEFAULT_MIN_PTS};
pub use hierarchical::{hierarchical, Linkage};
pub use kmeans::{kmeans_pp, KMeansConfig};

/// Label value for points DBSCAN leaves unclustered.
pub const NOISE: i32 = -1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ClusterParams {
    Kmeans(KMeansConfig),
    Hierarchical { k: usize, linkage: Linkage },
    Dbscan { eps: f64, min_pts: usize },
}

impl ClusterParams {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterParams::Kmeans(_) => "kmeans",
            ClusterParams::Hierarchical { .. } => "hierarchical",
            ClusterParams::Dbscan { .. } => "dbscan",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ClusterAssignment<T> {
    /// One label per point: `0..k` or [`NOISE`].
    pub labels: Vec<i32>,
    pub params: ClusterParams,
    /// Cluster means, row `c` for label `c`; absent for DBSCAN.
    pub centroids: Option<Matrix<T>>,
    /// Sum of squared distances to the assigned centroid (k-means only).
    pub inertia: Option<f64>,
    /// Inertia after every assignment step of the winning k-means restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inertia_trace: Vec<f64>,
    /// Dendrogram merge heights in merge order (hierarchical only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merge_heights: Vec<f64>,
}

impl<T: Scalar> Artifact for ClusterAssignment<T> {
    const KIND: &'static str = "cluster-assignment";
    const VERSION: u32 = 1;
}

impl<T: Scalar> ClusterAssignment<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct non-noise clusters.
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().filter(|&&l| l >= 0).max().map_or(0, |&m| m as usize + 1)
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_clusters();
        if self.labels.iter().any(|&l| l < NOISE) {
            return Err(Error::Data("cluster labels below -1".into()));
        }
        if let Some(c) = &self.centroids {
            if c.rows() != k {
                return Err(Error::shape("cluster centroids", k, c.rows()));
            }
        }
        Ok(())
    }
}

/// Labels renumbered by order of first appearance, noise left alone. Two
/// labelings describe the same partition exactly when these agree.
pub fn canonical_labels(labels: &[i32]) -> Vec<i32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            if l == NOISE {
                NOISE
            } else {
                let next = map.len() as i32;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}

/// Means of the points carrying each label `0..k`.
pub(crate) fn cluster_means<T: Scalar>(x: &Matrix<T>, labels: &[i32], k: usize) -> Matrix<T> {
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            let l = l as usize;
            counts[l] += 1;
            for (s, &v) in sums.row_mut(l).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            let inv = T::one() / T::from_usize_lossy(n);
            sums.row_mut(c).iter_mut().for_each(|v| *v *= inv);
        }
    }
    sums
}

fn check_points<T: Scalar>(x: &Matrix<T>, context: &str) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::invalid(format!("{context} needs a non-empty point set")));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{context} input")));
    }
    Ok(())
}
