//! Low-dimensional projections of latent vectors: linear PCA, RBF kernel
//! PCA, exact t-SNE and Laplacian-eigenmap spectral embedding.
//!
//! Every method sorts its input rows by content before doing any
//! order-sensitive work, so permuting the input permutes the output and
//! nothing else.

mod kernel;
mod pca;
mod spectral;
mod tsne;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub use kernel::{default_rbf_gamma, kernel_pca_rbf, rbf_kernel};
pub use pca::{pca, PcaResult};
pub use spectral::spectral_embedding;
pub use tsne::{perplexity_affinities, tsne, TsneConfig, TsneResult};

/// Method tag plus the parameters that produced an embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ProjectionParams {
    Pca { components: usize },
    KernelPca { components: usize, gamma: f64 },
    Tsne(TsneConfig),
    Spectral { neighbors: usize, dims: usize },
}

impl ProjectionParams {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectionParams::Pca { .. } => "pca",
            ProjectionParams::KernelPca { .. } => "kernel-pca",
            ProjectionParams::Tsne(_) => "tsne",
            ProjectionParams::Spectral { .. } => "spectral",
        }
    }
}

/// Projected coordinates, one row per input vector (two columns for plots).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Embedding<T> {
    pub points: Matrix<T>,
    pub params: ProjectionParams,
    pub source_dim: usize,
    /// Class tags carried along for plotting and scoring; may be empty.
    #[serde(default)]
    pub labels: Vec<usize>,
}

impl<T: Scalar> Artifact for Embedding<T> {
    const KIND: &'static str = "embedding";
    const VERSION: u32 = 1;
}

impl<T: Scalar> Embedding<T> {
    pub fn new(points: Matrix<T>, params: ProjectionParams, source_dim: usize) -> Result<Self> {
        if !points.is_finite() {
            return Err(Error::NonFinite(format!("{} embedding", params.name())));
        }
        Ok(Embedding {
            points,
            params,
            source_dim,
            labels: Vec::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.points.rows() {
            return Err(Error::shape("embedding labels", self.points.rows(), labels.len()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.points.cols()
    }

    /// Checks the structural invariants after loading from disk.
    pub fn validate(&self) -> Result<()> {
        if !self.points.is_finite() {
            return Err(Error::NonFinite("embedding coordinates".into()));
        }
        if !self.labels.is_empty() && self.labels.len() != self.points.rows() {
            return Err(Error::shape("embedding labels", self.points.rows(), self.labels.len()));
        }
        Ok(())
    }
}

fn check_input<T: Scalar>(x: &Matrix<T>, min_rows: usize, context: &str) -> Result<()> {
    if x.rows() < min_rows {
        return Err(Error::invalid(format!(
            "{context} needs at least {min_rows} points, got {}",
            x.rows()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::invalid(format!("{context} needs at least one feature")));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{context} input")));
    }
    Ok(())
}
