//! Dense linear algebra, activations, sampling, optimisation, and a
//! finite-difference gradient oracle.

mod activation;
mod eigen;
mod gemm;
mod gradcheck;
mod matrix;
mod optim;
mod order;
mod rng;

pub use activation::{exp_f32, sigmoid, sigmoid_f32, softplus, tanh_f32};
pub use eigen::{canonical_sign, symmetric_eigen, SymmetricEigen};
pub use gemm::{add_column_sums, gemm, MatRef};
pub use gradcheck::{finite_difference_gradient, max_relative_error};
pub use matrix::{
    axpy, dot, gemv_acc, gemv_t_acc, ger_acc, pairwise_squared_distances, squared_distance, Matrix,
};
pub use order::{canonical_row_order, distinct_ranks, scatter_rows};
pub use optim::{adam_step, clip_global_norm, global_norm, AdamState};
pub use rng::{sample_standard_gaussian, SeededRng};
