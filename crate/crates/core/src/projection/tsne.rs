use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    canonical_row_order, distinct_ranks, pairwise_squared_distances, scatter_rows, Matrix,
    SeededRng,
};
use crate::projection::{check_input, Embedding, ProjectionParams};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 4 {
            return Err(Error::invalid(format!("t-SNE needs at least 4 points, got {n}")));
        }
        if !(self.perplexity > 1.0 && self.perplexity < n as f64) {
            return Err(Error::invalid(format!(
                "perplexity must lie strictly between 1 and {n}, got {}",
                self.perplexity
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.early_exaggeration >= 1.0) {
            return Err(Error::invalid("t-SNE learning rate must be positive and exaggeration at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TsneResult<T> {
    pub embedding: Embedding<T>,
    /// `(iteration, KL(P || Q))` sampled every ten iterations plus the final state.
    pub kl_trace: Vec<(usize, f64)>,
}

impl<T> TsneResult<T> {
    pub fn kl_at(&self, iteration: usize) -> Option<f64> {
        self.kl_trace.iter().find(|(i, _)| *i == iteration).map(|&(_, kl)| kl)
    }

    pub fn final_kl(&self) -> f64 {
        self.kl_trace.last().map_or(f64::NAN, |&(_, kl)| kl)
    }
}

const ENTROPY_TOL: f64 = 1e-10;
const SEARCH_STEPS: usize = 200;
const INIT_SCALE: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;
const KL_EVERY: usize = 10;

/// Conditional affinities `p(j|i)` whose row entropies match `ln(perplexity)`,
/// found by bisection on each row's precision. Also returns each row's
/// achieved perplexity in bits (`2^H` with `H` in bits).
pub fn perplexity_affinities(dist2: &Matrix<f64>, perplexity: f64) -> Result<(Matrix<f64>, Vec<f64>)> {
    let n = dist2.rows();
    if n < 2 || dist2.cols() != n {
        return Err(Error::shape("perplexity_affinities", "square matrix with n >= 2", format!("{:?}", dist2.shape())));
    }
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::invalid(format!(
            "perplexity must lie strictly between 1 and {n}, got {perplexity}"
        )));
    }
    let target = perplexity.ln();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| search_row(dist2.row(i), i, target))
        .collect();
    let mut p = Matrix::zeros(n, n);
    let mut achieved = Vec::with_capacity(n);
    for (i, (row, h)) in rows.into_iter().enumerate() {
        p.row_mut(i).copy_from_slice(&row);
        achieved.push(h.exp());
    }
    Ok((p, achieved))
}

/// Row `i` of the conditional affinities plus its entropy in nats.
fn search_row(d: &[f64], i: usize, target: f64) -> (Vec<f64>, f64) {
    let shift = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut row = vec![0.0; d.len()];
    let eval = |beta: f64, row: &mut [f64]| -> f64 {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, (&dj, r)) in d.iter().zip(row.iter_mut()).enumerate() {
            if j == i {
                *r = 0.0;
                continue;
            }
            let s = dj - shift;
            let e = (-beta * s).exp();
            *r = e;
            sum += e;
            weighted += s * e;
        }
        for r in row.iter_mut() {
            *r /= sum;
        }
        sum.ln() + beta * weighted / sum
    };
    let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
    let mut h = eval(beta, &mut row);
    for _ in 0..SEARCH_STEPS {
        if (h - target).abs() < ENTROPY_TOL {
            break;
        }
        if h > target {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
        h = eval(beta, &mut row);
    }
    (row, h)
}

/// Exact t-SNE into two dimensions.
pub fn tsne<T: Scalar>(x: &Matrix<T>, config: &TsneConfig) -> Result<TsneResult<T>> {
    check_input(x, 4, "t-SNE")?;
    let n = x.rows();
    config.validate(n)?;

    let order = canonical_row_order(x);
    let sorted: Matrix<f64> = x.select_rows(&order).cast();
    let (cond, _) = perplexity_affinities(&pairwise_squared_distances(&sorted), config.perplexity)?;
    let mut p = Matrix::zeros(n, n);
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = (cond[(i, j)] + cond[(j, i)]) / norm;
        }
    }
    let p_entropy: f64 = p.as_slice().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();

    // duplicates share a starting point, so they move together throughout
    let ranks = distinct_ranks(x, &order);
    let distinct = ranks.last().map_or(0, |&r| r + 1);
    let mut rng = SeededRng::new(config.seed);
    let seeds: Vec<[f64; 2]> = (0..distinct)
        .map(|_| [INIT_SCALE * rng.standard_normal(), INIT_SCALE * rng.standard_normal()])
        .collect();
    let mut y = vec![0.0; n * 2];
    for (i, &r) in ranks.iter().enumerate() {
        y[2 * i..2 * i + 2].copy_from_slice(&seeds[r]);
    }

    let mut update = vec![0.0; n * 2];
    let mut gains = vec![1.0f64; n * 2];
    let mut trace = Vec::new();
    for it in 0..config.iterations {
        let early = it < config.exaggeration_iterations;
        let exaggeration = if early { config.early_exaggeration } else { 1.0 };
        let momentum = if early { config.initial_momentum } else { config.final_momentum };
        let want_kl = it % KL_EVERY == 0;
        let step = gradient_pass(&p, &y, exaggeration, want_kl);
        if want_kl {
            trace.push((it, kl_from(p_entropy, &step)));
        }
        for (((g, u), gain), yv) in step
            .grad
            .iter()
            .zip(update.iter_mut())
            .zip(gains.iter_mut())
            .zip(y.iter_mut())
        {
            *gain = if (*g > 0.0) != (*u > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
            *gain = gain.max(MIN_GAIN);
            *u = momentum * *u - config.learning_rate * *gain * g;
            *yv += *u;
        }
        center(&mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("t-SNE diverged at iteration {it}")));
        }
    }
    let last = gradient_pass(&p, &y, 1.0, true);
    trace.push((config.iterations, kl_from(p_entropy, &last)));

    let sorted_points = Matrix::from_vec(n, 2, y.iter().map(|&v| T::lit(v)).collect())?;
    let embedding = Embedding::new(
        scatter_rows(&sorted_points, &order),
        ProjectionParams::Tsne(config.clone()),
        x.cols(),
    )?;
    Ok(TsneResult {
        embedding,
        kl_trace: trace,
    })
}

struct Pass {
    grad: Vec<f64>,
    /// `sum_ij w_ij` over i != j.
    z: f64,
    /// `sum_ij p_ij ln w_ij`.
    p_log_w: f64,
}

fn kl_from(p_entropy: f64, pass: &Pass) -> f64 {
    // KL = sum p ln p - sum p ln q, with q = w / Z and sum p = 1
    p_entropy - pass.p_log_w + pass.z.ln()
}

fn gradient_pass(p: &Matrix<f64>, y: &[f64], exaggeration: f64, want_kl: bool) -> Pass {
    let n = p.rows();
    // per row: attraction (2), repulsion (2), sum w, sum p ln w
    let rows: Vec<[f64; 6]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (yi0, yi1) = (y[2 * i], y[2 * i + 1]);
            let prow = p.row(i);
            let mut acc = [0.0; 6];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d0 = yi0 - y[2 * j];
                let d1 = yi1 - y[2 * j + 1];
                let w = 1.0 / (1.0 + d0 * d0 + d1 * d1);
                let pw = prow[j] * w;
                acc[0] += pw * d0;
                acc[1] += pw * d1;
                let ww = w * w;
                acc[2] += ww * d0;
                acc[3] += ww * d1;
                acc[4] += w;
                if want_kl && prow[j] > 0.0 {
                    acc[5] += prow[j] * w.ln();
                }
            }
            acc
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r[4]).sum();
    let p_log_w: f64 = rows.iter().map(|r| r[5]).sum();
    let mut grad = vec![0.0; 2 * n];
    for (i, r) in rows.iter().enumerate() {
        grad[2 * i] = 4.0 * (exaggeration * r[0] - r[2] / z);
        grad[2 * i + 1] = 4.0 * (exaggeration * r[1] - r[3] / z);
    }
    Pass { grad, z, p_log_w }
}

fn center(y: &mut [f64]) {
    let n = (y.len() / 2) as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for c in y.chunks_exact(2) {
        m0 += c[0];
        m1 += c[1];
    }
    m0 /= n;
    m1 /= n;
    for c in y.chunks_exact_mut(2) {
        c[0] -= m0;
        c[1] -= m1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sample_standard_gaussian;

    #[test]
    fn rows_hit_target_perplexity() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(4), 80, 5);
        let (p, achieved) = perplexity_affinities(&pairwise_squared_distances(&x), 15.0).unwrap();
        for (i, a) in achieved.iter().enumerate() {
            assert!((a - 15.0).abs() < 1e-3, "row {i}: {a}");
            let s: f64 = p.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(p[(i, i)], 0.0);
        }
    }

    #[test]
    fn kl_identity_matches_direct_sum() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(8), 12, 3);
        let (cond, _) = perplexity_affinities(&pairwise_squared_distances(&x), 4.0).unwrap();
        let n = 12;
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = (cond[(i, j)] + cond[(j, i)]) / (2.0 * n as f64);
            }
        }
        let y: Vec<f64> = (0..2 * n).map(|k| ((k * 7 % 11) as f64) * 0.3).collect();
        let ent: f64 = p.as_slice().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        let fast = kl_from(ent, &gradient_pass(&p, &y, 1.0, true));
        let mut z = 0.0;
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = (y[2 * i] - y[2 * j]).powi(2) + (y[2 * i + 1] - y[2 * j + 1]).powi(2);
                    w[(i, j)] = 1.0 / (1.0 + d);
                    z += w[(i, j)];
                }
            }
        }
        let mut direct = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    direct += p[(i, j)] * (p[(i, j)] / (w[(i, j)] / z)).ln();
                }
            }
        }
        assert!((fast - direct).abs() < 1e-12, "{fast} vs {direct}");
    }

    #[test]
    fn gradient_matches_finite_difference_of_kl() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(2), 8, 2);
        let (cond, _) = perplexity_affinities(&pairwise_squared_distances(&x), 3.0).unwrap();
        let n = 8;
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = (cond[(i, j)] + cond[(j, i)]) / (2.0 * n as f64);
            }
        }
        let ent: f64 = p.as_slice().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        let y: Vec<f64> = sample_standard_gaussian::<f64>(&mut SeededRng::new(3), 1, 2 * n).into_vec();
        let g = gradient_pass(&p, &y, 1.0, false).grad;
        let h = 1e-6;
        for k in 0..2 * n {
            let mut a = y.clone();
            let mut b = y.clone();
            a[k] += h;
            b[k] -= h;
            let fd = (kl_from(ent, &gradient_pass(&p, &a, 1.0, true))
                - kl_from(ent, &gradient_pass(&p, &b, 1.0, true)))
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn rejects_bad_perplexity() {
        let x: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(1), 10, 2);
        for perp in [1.0, 0.5, 10.0, 20.0] {
            let cfg = TsneConfig { perplexity: perp, iterations: 5, ..Default::default() };
            assert!(tsne(&x, &cfg).is_err(), "perplexity {perp}");
        }
        let tiny: Matrix<f64> = sample_standard_gaussian(&mut SeededRng::new(1), 3, 2);
        let cfg = TsneConfig { perplexity: 2.0, ..Default::default() };
        assert!(tsne(&tiny, &cfg).is_err());
    }
}
