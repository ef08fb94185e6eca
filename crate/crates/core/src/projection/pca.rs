use crate::error::{Error, Result};
use crate::numerics::{
    canonical_row_order, canonical_sign, gemm, scatter_rows, symmetric_eigen, Matrix,
};
use crate::projection::{check_input, Embedding, ProjectionParams};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PcaResult<T> {
    pub embedding: Embedding<T>,
    /// Unit principal directions as columns (`d x k`).
    pub components: Matrix<T>,
    /// Covariance eigenvalues, non-increasing.
    pub explained_variance: Vec<T>,
    pub mean: Vec<T>,
}

/// Principal component scores of the centered data on the top `k` axes.
pub fn pca<T: Scalar>(x: &Matrix<T>, k: usize) -> Result<PcaResult<T>> {
    check_input(x, 2, "pca")?;
    let (n, d) = x.shape();
    if k == 0 || k > n.min(d) {
        return Err(Error::invalid(format!(
            "pca components must be in 1..={}, got {k}",
            n.min(d)
        )));
    }
    let order = canonical_row_order(x);
    let mut xc = x.select_rows(&order);
    let mean = xc.column_means();
    for i in 0..n {
        for (v, &m) in xc.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }

    let mut cov = Matrix::zeros(d, d);
    let scale = T::one() / T::from_usize_lossy(n - 1);
    gemm(scale, xc.view().t(), xc.view(), T::zero(), cov.as_mut_slice());
    // exact symmetry keeps the eigensolver honest
    for i in 0..d {
        for j in 0..i {
            let v = (cov[(i, j)] + cov[(j, i)]) * T::lit(0.5);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = symmetric_eigen(&cov)?;

    let mut components = Matrix::zeros(d, k);
    let mut explained = Vec::with_capacity(k);
    for (c, idx) in eig.descending_order().into_iter().take(k).enumerate() {
        let mut v = eig.vector(idx);
        canonical_sign(&mut v);
        for (r, &val) in v.iter().enumerate() {
            components[(r, c)] = val;
        }
        explained.push(eig.values[idx].max(T::zero()));
    }

    let mut scores = Matrix::zeros(n, k);
    gemm(T::one(), xc.view(), components.view(), T::zero(), scores.as_mut_slice());
    let embedding = Embedding::new(
        scatter_rows(&scores, &order),
        ProjectionParams::Pca { components: k },
        d,
    )?;
    Ok(PcaResult {
        embedding,
        components,
        explained_variance: explained,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{pairwise_squared_distances, sample_standard_gaussian, SeededRng};

    #[test]
    fn line_has_one_direction() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 0.3 - 2.0, 2.0 * (i as f64 * 0.3 - 2.0)]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let r = pca(&x, 2).unwrap();
        let s = 5f64.sqrt();
        assert!((r.components[(0, 0)] - 1.0 / s).abs() < 1e-12);
        assert!((r.components[(1, 0)] - 2.0 / s).abs() < 1e-12);
        assert!(r.explained_variance[1].abs() < 1e-10);
    }

    #[test]
    fn full_rank_rotation_keeps_distances() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(3), 30, 4);
        let r = pca(&x, 4).unwrap();
        let a = pairwise_squared_distances(&x);
        let b = pairwise_squared_distances(&r.embedding.points);
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p.sqrt() - q.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn isotropic_cloud_has_flat_spectrum() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(11), 10_000, 3);
        let r = pca(&x, 2).unwrap();
        let (a, b) = (r.explained_variance[0], r.explained_variance[1]);
        assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
    }

    #[test]
    fn rejects_bad_component_count() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(1), 5, 3);
        assert!(pca(&x, 0).is_err());
        assert!(pca(&x, 4).is_err());
        assert!(pca(&Matrix::<f64>::zeros(1, 3), 1).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x: Matrix<f32> = sample_standard_gaussian(&mut SeededRng::new(2), 50, 3);
        let r = pca(&x, 2).unwrap();
        assert_eq!(r.embedding.points.shape(), (50, 2));
        assert!(r.explained_variance[0] >= r.explained_variance[1]);
    }
}
