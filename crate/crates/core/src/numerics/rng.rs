use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Seeded, platform-stable random source (ChaCha8 stream, ziggurat normals).
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for sub-stream `stream`; the parent is not advanced.
    pub fn fork(&self, stream: u64) -> SeededRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        SeededRng {
            seed: self.seed,
            inner,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n as u64) as usize
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        items.shuffle(&mut self.inner);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

/// Matrix of i.i.d. standard normal draws, filled in row-major order.
pub fn sample_standard_gaussian<T: Scalar>(
    rng: &mut SeededRng,
    rows: usize,
    cols: usize,
) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.standard_normal()))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(42), 3, 4);
        let b: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(42), 3, 4);
        assert_eq!(a, b);
        let c: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(43), 3, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_moments() {
        let m: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(7), 1000, 1000);
        let n = m.len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn empty_shape() {
        let m: Matrix<f32> = sample_standard_gaussian(&mut SeededRng::new(1), 0, 5);
        assert_eq!(m.shape(), (0, 5));
        assert!(m.is_empty());
    }

    #[test]
    fn forks_are_independent_and_stable() {
        let root = SeededRng::new(9);
        let mut a = root.fork(1);
        let mut b = root.fork(1);
        let mut c = root.fork(2);
        let xa = a.next_u64();
        assert_eq!(xa, b.next_u64());
        assert_ne!(xa, c.next_u64());
    }
}
