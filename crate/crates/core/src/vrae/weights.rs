use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};
use crate::scalar::Scalar;
use crate::vrae::VraeConfig;

/// Number of parameter tensors in [`VraeWeights`].
pub const TENSOR_COUNT: usize = 15;

pub const TENSOR_NAMES: [&str; TENSOR_COUNT] = [
    "enc_w_ih",
    "enc_w_hh",
    "enc_b",
    "mu_w",
    "mu_b",
    "sigma_w",
    "sigma_b",
    "init_h_w",
    "init_h_b",
    "init_c_w",
    "init_c_b",
    "dec_w_hh",
    "dec_b",
    "out_w",
    "out_b",
];

/// All trainable parameters. LSTM gate blocks are stacked in the order
/// input, forget, candidate, output; biases are column vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct VraeWeights<T> {
    /// `4H x D`
    pub enc_w_ih: Matrix<T>,
    /// `4H x H`
    pub enc_w_hh: Matrix<T>,
    pub enc_b: Matrix<T>,
    /// `Z x H`
    pub mu_w: Matrix<T>,
    pub mu_b: Matrix<T>,
    /// `Z x H`
    pub sigma_w: Matrix<T>,
    pub sigma_b: Matrix<T>,
    /// `H x Z`, latent to initial decoder hidden state
    pub init_h_w: Matrix<T>,
    pub init_h_b: Matrix<T>,
    /// `H x Z`, latent to initial decoder cell state
    pub init_c_w: Matrix<T>,
    pub init_c_b: Matrix<T>,
    /// `4H x H`; the decoder is driven by zero inputs, so it has no input weights
    pub dec_w_hh: Matrix<T>,
    pub dec_b: Matrix<T>,
    /// `D x H`
    pub out_w: Matrix<T>,
    pub out_b: Matrix<T>,
}

fn expected_shapes(cfg: &VraeConfig) -> [(usize, usize); TENSOR_COUNT] {
    let (d, h, z) = (cfg.input_dim, cfg.hidden_units, cfg.latent_dim);
    [
        (4 * h, d),
        (4 * h, h),
        (4 * h, 1),
        (z, h),
        (z, 1),
        (z, h),
        (z, 1),
        (h, z),
        (h, 1),
        (h, z),
        (h, 1),
        (4 * h, h),
        (4 * h, 1),
        (d, h),
        (d, 1),
    ]
}

impl<T: Scalar> VraeWeights<T> {
    pub fn zeros(cfg: &VraeConfig) -> Self {
        let tensors = expected_shapes(cfg)
            .iter()
            .map(|&(r, c)| Matrix::zeros(r, c))
            .collect();
        Self::from_tensors(tensors)
    }

    /// Uniform in `±1/sqrt(fan_in)`; forget-gate biases start at 1.
    pub fn init(cfg: &VraeConfig, rng: &mut SeededRng) -> Self {
        let (d, h, z) = (cfg.input_dim, cfg.hidden_units, cfg.latent_dim);
        let fan_ins = [d + h, d + h, d + h, h, h, h, h, z, z, z, z, h, h, h, h];
        let mut w = Self::zeros(cfg);
        for (t, fan_in) in w.tensors_mut().into_iter().zip(fan_ins) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in t.as_mut_slice() {
                *v = T::lit(rng.uniform_range(-bound, bound));
            }
        }
        for k in h..2 * h {
            w.enc_b[(k, 0)] = T::one();
            w.dec_b[(k, 0)] = T::one();
        }
        w
    }

    pub fn tensors(&self) -> [&Matrix<T>; TENSOR_COUNT] {
        [
            &self.enc_w_ih,
            &self.enc_w_hh,
            &self.enc_b,
            &self.mu_w,
            &self.mu_b,
            &self.sigma_w,
            &self.sigma_b,
            &self.init_h_w,
            &self.init_h_b,
            &self.init_c_w,
            &self.init_c_b,
            &self.dec_w_hh,
            &self.dec_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix<T>; TENSOR_COUNT] {
        [
            &mut self.enc_w_ih,
            &mut self.enc_w_hh,
            &mut self.enc_b,
            &mut self.mu_w,
            &mut self.mu_b,
            &mut self.sigma_w,
            &mut self.sigma_b,
            &mut self.init_h_w,
            &mut self.init_h_b,
            &mut self.init_c_w,
            &mut self.init_c_b,
            &mut self.dec_w_hh,
            &mut self.dec_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn to_tensors(&self) -> Vec<Matrix<T>> {
        self.tensors().into_iter().cloned().collect()
    }

    /// Inverse of [`to_tensors`](Self::to_tensors). Panics unless given exactly
    /// [`TENSOR_COUNT`] tensors.
    pub fn from_tensors(tensors: Vec<Matrix<T>>) -> Self {
        let [enc_w_ih, enc_w_hh, enc_b, mu_w, mu_b, sigma_w, sigma_b, init_h_w, init_h_b, init_c_w, init_c_b, dec_w_hh, dec_b, out_w, out_b]: [Matrix<T>; TENSOR_COUNT] =
            tensors.try_into().unwrap_or_else(|v: Vec<_>| {
                panic!("expected {TENSOR_COUNT} tensors, got {}", v.len())
            });
        VraeWeights {
            enc_w_ih,
            enc_w_hh,
            enc_b,
            mu_w,
            mu_b,
            sigma_w,
            sigma_b,
            init_h_w,
            init_h_b,
            init_c_w,
            init_c_b,
            dec_w_hh,
            dec_b,
            out_w,
            out_b,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::from_tensors(
            self.tensors()
                .iter()
                .map(|t| Matrix::zeros(t.rows(), t.cols()))
                .collect(),
        )
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &VraeWeights<T>) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b).expect("identically shaped weights");
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in self.tensors_mut() {
            t.scale_in_place(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Checks every tensor against the shapes implied by `cfg`.
    pub fn validate(&self, cfg: &VraeConfig) -> Result<()> {
        for ((t, name), shape) in self
            .tensors()
            .iter()
            .zip(TENSOR_NAMES)
            .zip(expected_shapes(cfg))
        {
            if t.shape() != shape {
                return Err(Error::Shape {
                    context: "VraeWeights",
                    expected: format!("{name} {shape:?}"),
                    actual: format!("{:?}", t.shape()),
                });
            }
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(())
    }
}
