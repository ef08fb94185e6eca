//! Variational recurrent autoencoder pipeline for unsupervised anomaly
//! detection in multivariate time series.

pub mod artifact;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod numerics;
pub mod projection;
pub mod scalar;
pub mod scoring;
pub mod vrae;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = numerics::Matrix<f64>;
pub type Matrix32 = numerics::Matrix<f32>;
pub type WindowedDataset64 = dataset::WindowedDataset<f64>;
pub type VraeWeights64 = vrae::VraeWeights<f64>;
pub type Checkpoint64 = vrae::Checkpoint<f64>;
pub type Embedding64 = projection::Embedding<f64>;
pub type ClusterAssignment64 = clustering::ClusterAssignment<f64>;
