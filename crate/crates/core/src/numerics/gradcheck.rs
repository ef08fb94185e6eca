//! Central finite differences, used as an independent oracle for analytic gradients.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Central-difference gradient of `f` at `params`, one coordinate at a time:
/// `(f(θ + h e_i) - f(θ - h e_i)) / 2h`.
pub fn finite_difference_gradient<T, F>(
    mut f: F,
    params: &[Matrix<T>],
    h: T,
) -> Result<Vec<Matrix<T>>>
where
    T: Scalar,
    F: FnMut(&[Matrix<T>]) -> T,
{
    if !(h > T::zero()) {
        return Err(Error::invalid(format!("step size must be positive, got {h}")));
    }
    let mut work = params.to_vec();
    let mut grads: Vec<Matrix<T>> = params
        .iter()
        .map(|p| Matrix::zeros(p.rows(), p.cols()))
        .collect();
    let two_h = h + h;
    for t in 0..work.len() {
        for k in 0..work[t].len() {
            let original = work[t].as_slice()[k];
            work[t].as_mut_slice()[k] = original + h;
            let plus = f(&work);
            work[t].as_mut_slice()[k] = original - h;
            let minus = f(&work);
            work[t].as_mut_slice()[k] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective at tensor {t}, coordinate {k}"
                )));
            }
            grads[t].as_mut_slice()[k] = (plus - minus) / two_h;
        }
    }
    Ok(grads)
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over all coordinates.
pub fn max_relative_error<T: Scalar>(analytic: &[Matrix<T>], numeric: &[Matrix<T>], floor: T) -> T {
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.as_slice().iter().zip(n.as_slice()))
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::softplus;

    #[test]
    fn quadratic() {
        let p = vec![Matrix::column_vector(vec![3.0f64])];
        let g = finite_difference_gradient(|q| q[0][(0, 0)].powi(2), &p, 1e-5).unwrap();
        assert!((g[0][(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function() {
        let p = vec![Matrix::from_rows(&[[1.0f64, 2.0], [3.0, 4.0]]).unwrap()];
        let g = finite_difference_gradient(|_| 7.5, &p, 1e-4).unwrap();
        assert!(g[0].as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softplus_slope_is_sigmoid() {
        let p = vec![Matrix::column_vector(vec![0.0f64])];
        let g = finite_difference_gradient(|q| softplus(q[0][(0, 0)]), &p, 1e-5).unwrap();
        assert!((g[0][(0, 0)] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let p = vec![Matrix::column_vector(vec![0.0f64])];
        assert!(finite_difference_gradient(|_| 1.0, &p, 0.0).is_err());
        let r = finite_difference_gradient(|q| 1.0 / q[0][(0, 0)].abs().min(0.0), &p, 1e-3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
