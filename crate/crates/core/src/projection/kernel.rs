use crate::error::{Error, Result};
use crate::numerics::{
    canonical_row_order, canonical_sign, pairwise_squared_distances, scatter_rows,
    symmetric_eigen, Matrix,
};
use crate::projection::{check_input, Embedding, ProjectionParams};
use crate::scalar::Scalar;

/// Gaussian kernel matrix `exp(-gamma * |x_i - x_j|^2)`, uncentered.
pub fn rbf_kernel<T: Scalar>(x: &Matrix<T>, gamma: T) -> Matrix<T> {
    let mut k = pairwise_squared_distances(x);
    for v in k.as_mut_slice() {
        *v = (-gamma * *v).exp();
    }
    k
}

/// `1 / (d * median pairwise squared distance)`, falling back to `1 / d`
/// when more than half the pairs coincide.
pub fn default_rbf_gamma<T: Scalar>(x: &Matrix<T>) -> T {
    let (n, d) = x.shape();
    let dist = pairwise_squared_distances(x);
    let mut upper: Vec<T> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        upper.extend_from_slice(&dist.row(i)[i + 1..]);
    }
    let dims = T::from_usize_lossy(d.max(1));
    if upper.is_empty() {
        return T::one() / dims;
    }
    upper.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = upper.len();
    let median = if m % 2 == 1 {
        upper[m / 2]
    } else {
        (upper[m / 2 - 1] + upper[m / 2]) * T::lit(0.5)
    };
    if median > T::zero() {
        T::one() / (dims * median)
    } else {
        T::one() / dims
    }
}

/// Kernel PCA with an RBF kernel: double-center the kernel matrix and
/// scale its top eigenvectors by the square roots of their eigenvalues.
pub fn kernel_pca_rbf<T: Scalar>(x: &Matrix<T>, k: usize, gamma: T) -> Result<Embedding<T>> {
    check_input(x, 2, "kernel pca")?;
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::invalid(format!("kernel gamma must be positive, got {gamma}")));
    }
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("kernel pca components must be in 1..={n}, got {k}")));
    }
    let order = canonical_row_order(x);
    let sorted = x.select_rows(&order);
    let mut km = rbf_kernel(&sorted, gamma);

    let nt = T::from_usize_lossy(n);
    let row_means: Vec<T> = km.row_iter().map(|r| r.iter().copied().sum::<T>() / nt).collect();
    let grand = row_means.iter().copied().sum::<T>() / nt;
    for i in 0..n {
        for j in 0..=i {
            // K is symmetric, so column means equal row means
            let v = km[(i, j)] - row_means[i] - row_means[j] + grand;
            km[(i, j)] = v;
            km[(j, i)] = v;
        }
    }
    let eig = symmetric_eigen(&km)?;

    let mut scores = Matrix::zeros(n, k);
    for (c, idx) in eig.descending_order().into_iter().take(k).enumerate() {
        let lambda = eig.values[idx].max(T::zero());
        let mut v = eig.vector(idx);
        canonical_sign(&mut v);
        let s = lambda.sqrt();
        for (r, &val) in v.iter().enumerate() {
            scores[(r, c)] = val * s;
        }
    }
    Embedding::new(
        scatter_rows(&scores, &order),
        ProjectionParams::KernelPca {
            components: k,
            gamma: gamma.to_f64_lossy(),
        },
        x.cols(),
    )
}
