//! Adam optimizer and global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Adam moment accumulators, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct AdamState<T> {
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub step: u64,
    pub first_moment: Vec<Matrix<T>>,
    pub second_moment: Vec<Matrix<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix<T>>) -> Self {
        Self::with_hyperparameters(params, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }

    pub fn with_hyperparameters<'a>(
        params: impl IntoIterator<Item = &'a Matrix<T>>,
        beta1: T,
        beta2: T,
        epsilon: T,
    ) -> Self {
        let zeros: Vec<Matrix<T>> = params
            .into_iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        AdamState {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    pub fn check_shapes<'a>(&self, params: impl IntoIterator<Item = &'a Matrix<T>>) -> Result<()> {
        let shapes: Vec<_> = params.into_iter().map(Matrix::shape).collect();
        if shapes.len() != self.first_moment.len() || shapes.len() != self.second_moment.len() {
            return Err(Error::shape(
                "AdamState",
                format!("{} tensors", self.first_moment.len()),
                shapes.len(),
            ));
        }
        for (i, shape) in shapes.iter().enumerate() {
            if self.first_moment[i].shape() != *shape || self.second_moment[i].shape() != *shape {
                return Err(Error::shape(
                    "AdamState",
                    format!("{:?}", self.first_moment[i].shape()),
                    format!("{shape:?} (tensor {i})"),
                ));
            }
        }
        Ok(())
    }
}

/// One bias-corrected Adam update of every tensor in `params`.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut Matrix<T>],
    grads: &[&Matrix<T>],
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape("adam_step", params.len(), grads.len()));
    }
    state.check_shapes(params.iter().map(|p| &**p))?;
    for (i, g) in grads.iter().enumerate() {
        if g.shape() != params[i].shape() {
            return Err(Error::shape(
                "adam_step gradient",
                format!("{:?}", params[i].shape()),
                format!("{:?}", g.shape()),
            ));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bias1 = T::one() - b1.powi(t);
    let bias2 = T::one() - b2.powi(t);
    for (i, param) in params.iter_mut().enumerate() {
        let m = state.first_moment[i].as_mut_slice();
        let v = state.second_moment[i].as_mut_slice();
        let g = grads[i].as_slice();
        for (k, p) in param.as_mut_slice().iter_mut().enumerate() {
            m[k] = b1 * m[k] + (T::one() - b1) * g[k];
            v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

pub fn global_norm<T: Scalar>(grads: &[&mut Matrix<T>]) -> T {
    grads.iter().map(|g| g.squared_norm()).sum::<T>().sqrt()
}

/// Rescales all gradients jointly so their concatenated Euclidean norm is at
/// most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut [&mut Matrix<T>], max_norm: T) -> Result<T> {
    if !(max_norm > T::zero()) {
        return Err(Error::invalid(format!(
            "clip norm must be positive, got {max_norm}"
        )));
    }
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale_in_place(scale);
        }
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> Matrix<f64> {
        Matrix::column_vector(vec![v])
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = Matrix::from_rows(&[[1.0f64, -2.0], [3.0, 0.5]]).unwrap();
        let before = p.clone();
        let g = Matrix::zeros(2, 2);
        let mut state = AdamState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut state, 0.1).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(1.0);
        let g = scalar(2.0);
        let mut state = AdamState::new([&p]);
        adam_step(&mut [&mut p], &[&g], &mut state, 0.1).unwrap();
        // m_hat / sqrt(v_hat) = g / |g| = 1 on the first step
        let expected = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
        assert!((p[(0, 0)] - expected).abs() < 1e-15);
        assert!((1.0 - p[(0, 0)] - 0.1).abs() < 1e-8);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut p = scalar(0.3);
            let mut state = AdamState::new([&p]);
            for k in 0..5 {
                let g = scalar(0.1 * k as f64 - 0.2);
                adam_step(&mut [&mut p], &[&g], &mut state, 0.01).unwrap();
            }
            (p, state)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut p = scalar(0.0);
        let g = Matrix::zeros(2, 1);
        let mut state = AdamState::new([&p]);
        assert!(adam_step(&mut [&mut p], &[&g], &mut state, 0.1).is_err());
        let mut q = Matrix::zeros(1, 2);
        assert!(adam_step(&mut [&mut q], &[&Matrix::zeros(1, 2)], &mut state, 0.1).is_err());
    }

    #[test]
    fn clip_examples() {
        let mut g = Matrix::column_vector(vec![6.0f64, 8.0]);
        clip_global_norm(&mut [&mut g], 5.0).unwrap();
        assert!((g[(0, 0)] - 3.0).abs() < 1e-15 && (g[(1, 0)] - 4.0).abs() < 1e-15);

        let mut small = Matrix::column_vector(vec![0.6f64, 0.8]);
        let before = small.clone();
        clip_global_norm(&mut [&mut small], 5.0).unwrap();
        assert_eq!(small, before);

        // 12^2 + 16^2 = 400 split across three tensors
        let mut a = Matrix::column_vector(vec![12.0f64]);
        let mut b = Matrix::from_rows(&[[0.0f64, 16.0]]).unwrap();
        let mut c = Matrix::zeros(2, 2);
        let norm = clip_global_norm(&mut [&mut a, &mut b, &mut c], 2.0).unwrap();
        assert_eq!(norm, 20.0);
        assert!((a[(0, 0)] - 1.2).abs() < 1e-15);
        assert!((b[(0, 1)] - 1.6).abs() < 1e-15);
        let after = global_norm(&[&mut a, &mut b, &mut c]);
        assert!((after - 2.0).abs() < 1e-12);

        assert!(clip_global_norm(&mut [&mut a], 0.0).is_err());
        assert!(clip_global_norm(&mut [&mut a], -1.0).is_err());
    }

    proptest! {
        #[test]
        fn clipping_is_idempotent(v in proptest::collection::vec(-100.0f64..100.0, 1..20), max in 0.01f64..50.0) {
            let mut g = Matrix::column_vector(v);
            clip_global_norm(&mut [&mut g], max).unwrap();
            let once = g.clone();
            prop_assert!(once.squared_norm().sqrt() <= max * (1.0 + 1e-12));
            clip_global_norm(&mut [&mut g], max).unwrap();
            for (a, b) in once.as_slice().iter().zip(g.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn fresh_adam_ignores_zero_gradients(v in proptest::collection::vec(-10.0f64..10.0, 1..10), steps in 1usize..5) {
            let mut p = Matrix::column_vector(v);
            let before = p.clone();
            let g = Matrix::zeros(p.rows(), 1);
            let mut state = AdamState::new([&p]);
            for _ in 0..steps {
                adam_step(&mut [&mut p], &[&g], &mut state, 0.5).unwrap();
            }
            prop_assert_eq!(p, before);
            prop_assert_eq!(state.step, steps as u64);
        }
    }
}
