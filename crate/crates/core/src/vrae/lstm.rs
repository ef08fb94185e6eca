//! Single-layer LSTM recursion over a batch of sequences, with a full
//! activation trace for backpropagation through time.
//!
//! Gate pre-activations `a = W_ih x_t + W_hh h_{t-1} + b` are split into the
//! input, forget, candidate and output blocks `[i | f | g | o]`:
//!
//! ```text
//! c_t = σ(f) ⊙ c_{t-1} + σ(i) ⊙ tanh(g)
//! h_t = σ(o) ⊙ tanh(c_t)
//! ```
//!
//! Sequences are stored time-major: step `t` of the batch is a contiguous
//! `B x width` block.

use crate::numerics::{add_column_sums, gemm, MatRef, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy)]
pub(crate) struct LstmParams<'a, T> {
    /// Absent for an input-free (zero-input) recursion.
    pub w_ih: Option<&'a Matrix<T>>,
    pub w_hh: &'a Matrix<T>,
    pub b: &'a Matrix<T>,
}

pub(crate) struct LstmGrads<'a, T> {
    pub w_ih: Option<&'a mut Matrix<T>>,
    pub w_hh: &'a mut Matrix<T>,
    pub b: &'a mut Matrix<T>,
}

/// Activations of every step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmTrace<T> {
    hidden: usize,
    batch: usize,
    steps: usize,
    /// `steps x B x 4H` post-activation gate values.
    gates: Vec<T>,
    /// `(steps + 1) x B x H`; block 0 is the initial cell state.
    cells: Vec<T>,
    /// `(steps + 1) x B x H`; block 0 is the initial hidden state.
    hiddens: Vec<T>,
    /// `steps x B x H`, `tanh(c_t)`.
    tanh_cells: Vec<T>,
}

impl<T: Scalar> LstmTrace<T> {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    fn block(&self) -> usize {
        self.batch * self.hidden
    }

    /// `B x H` hidden states after step `t` (`t = 0` is the initial state).
    pub fn hidden(&self, t: usize) -> &[T] {
        &self.hiddens[t * self.block()..(t + 1) * self.block()]
    }

    pub fn cell(&self, t: usize) -> &[T] {
        &self.cells[t * self.block()..(t + 1) * self.block()]
    }

    pub fn last_hidden(&self) -> &[T] {
        self.hidden(self.steps)
    }

    /// `steps x B x H` hidden states after steps `1..=steps`.
    pub(crate) fn outputs(&self) -> &[T] {
        &self.hiddens[self.block()..]
    }
}

/// Runs the recursion for `steps` steps. `inputs` is time-major
/// `steps x B x D`; `h0`, `c0` are `B x H`.
pub(crate) fn lstm_forward<T: Scalar>(
    p: LstmParams<'_, T>,
    inputs: Option<&[T]>,
    h0: &[T],
    c0: &[T],
    steps: usize,
) -> LstmTrace<T> {
    let h = p.w_hh.cols();
    let batch = h0.len() / h.max(1);
    let block = batch * h;
    let g4 = 4 * h;
    let mut trace = LstmTrace {
        hidden: h,
        batch,
        steps,
        gates: vec![T::zero(); steps * batch * g4],
        cells: vec![T::zero(); (steps + 1) * block],
        hiddens: vec![T::zero(); (steps + 1) * block],
        tanh_cells: vec![T::zero(); steps * block],
    };
    trace.cells[..block].copy_from_slice(c0);
    trace.hiddens[..block].copy_from_slice(h0);

    // input contributions for every step at once
    if let (Some(w_ih), Some(x)) = (p.w_ih, inputs) {
        let d = w_ih.cols();
        gemm(
            T::one(),
            MatRef::new(x, steps * batch, d),
            w_ih.view().t(),
            T::zero(),
            &mut trace.gates,
        );
    }
    let bias = p.b.as_slice();
    for row in trace.gates.chunks_exact_mut(g4.max(1)) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }

    for t in 0..steps {
        let pre = &mut trace.gates[t * batch * g4..(t + 1) * batch * g4];
        gemm(
            T::one(),
            MatRef::new(&trace.hiddens[t * block..(t + 1) * block], batch, h),
            p.w_hh.view().t(),
            T::one(),
            pre,
        );
        let (prev, next) = trace.cells.split_at_mut((t + 1) * block);
        let c_prev = &prev[t * block..];
        let c_next = &mut next[..block];
        let tc = &mut trace.tanh_cells[t * block..(t + 1) * block];
        let h_next = &mut trace.hiddens[(t + 1) * block..(t + 2) * block];
        for b in 0..batch {
            let gates = &mut pre[b * g4..(b + 1) * g4];
            T::sigmoid_slice(&mut gates[..2 * h]);
            T::tanh_slice(&mut gates[2 * h..3 * h]);
            T::sigmoid_slice(&mut gates[3 * h..]);
            let o = b * h;
            let (c_out, tc_out) = (&mut c_next[o..o + h], &mut tc[o..o + h]);
            let (ig, rest) = gates.split_at(h);
            let (fg, rest) = rest.split_at(h);
            let (gg, og) = rest.split_at(h);
            for ((((c, &cp), &i), &f), &g) in c_out.iter_mut().zip(&c_prev[o..o + h]).zip(ig).zip(fg).zip(gg) {
                *c = f * cp + i * g;
            }
            tc_out.copy_from_slice(c_out);
            T::tanh_slice(tc_out);
            for ((hn, &og), &th) in h_next[o..o + h].iter_mut().zip(og).zip(tc_out.iter()) {
                *hn = og * th;
            }
        }
    }
    trace
}

/// Backpropagates through the whole trace. `dh_out` (optional,
/// `steps x B x H`) holds loss gradients flowing into each emitted hidden
/// state, `dh_last` (`B x H`) an extra gradient on the final hidden state.
/// Parameter gradients are added into `grads`; returns the gradients on the
/// initial `(h0, c0)`, each `B x H`.
pub(crate) fn lstm_backward<T: Scalar>(
    p: LstmParams<'_, T>,
    trace: &LstmTrace<T>,
    inputs: Option<&[T]>,
    dh_out: Option<&[T]>,
    dh_last: &[T],
    grads: LstmGrads<'_, T>,
) -> (Vec<T>, Vec<T>) {
    let (h, batch, steps) = (trace.hidden, trace.batch, trace.steps);
    let block = batch * h;
    let g4 = 4 * h;
    let one = T::one();
    let mut dh = dh_last.to_vec();
    let mut dc = vec![T::zero(); block];
    let mut da_all = vec![T::zero(); steps * batch * g4];

    for t in (0..steps).rev() {
        if let Some(d) = dh_out {
            for (a, &g) in dh.iter_mut().zip(&d[t * block..(t + 1) * block]) {
                *a += g;
            }
        }
        let c_prev = trace.cell(t);
        let tc = &trace.tanh_cells[t * block..(t + 1) * block];
        let da_t = &mut da_all[t * batch * g4..(t + 1) * batch * g4];
        for b in 0..batch {
            let gates = &trace.gates[(t * batch + b) * g4..(t * batch + b + 1) * g4];
            let da = &mut da_t[b * g4..(b + 1) * g4];
            let o = b * h;
            let (di, rest) = da.split_at_mut(h);
            let (df, rest) = rest.split_at_mut(h);
            let (dg, dout) = rest.split_at_mut(h);
            let (ig, rest) = gates.split_at(h);
            let (fg, rest) = rest.split_at(h);
            let (gg, og) = rest.split_at(h);
            let (dh_b, tc_b, cp_b) = (&dh[o..o + h], &tc[o..o + h], &c_prev[o..o + h]);
            let dc_b = &mut dc[o..o + h];
            // offsets hoisted out so the lane loop carries no checked arithmetic
            for k in 0..h {
                let (i, f, g, o) = (ig[k], fg[k], gg[k], og[k]);
                let (dhk, th) = (dh_b[k], tc_b[k]);
                let dck = dc_b[k] + dhk * o * (one - th * th);
                di[k] = dck * g * i * (one - i);
                df[k] = dck * cp_b[k] * f * (one - f);
                dg[k] = dck * i * (one - g * g);
                dout[k] = dhk * th * o * (one - o);
                dc_b[k] = dck * f;
            }
        }
        gemm(one, MatRef::new(da_t, batch, g4), p.w_hh.view(), T::zero(), &mut dh);
    }

    let LstmGrads { w_ih, w_hh, b } = grads;
    let rows = steps * batch;
    add_column_sums(&da_all, g4, b.as_mut_slice());
    let da = MatRef::new(&da_all, rows, g4);
    gemm(one, da.t(), MatRef::new(&trace.hiddens[..rows * h], rows, h), one, w_hh.as_mut_slice());
    if let (Some(gw), Some(x)) = (w_ih, inputs) {
        let d = gw.cols();
        gemm(one, da.t(), MatRef::new(x, rows, d), one, gw.as_mut_slice());
    }
    (dh, dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_difference_gradient, max_relative_error, SeededRng};

    fn random(rng: &mut SeededRng, r: usize, c: usize) -> Matrix<f64> {
        let data = (0..r * c).map(|_| rng.uniform_range(-0.8, 0.8)).collect();
        Matrix::from_vec(r, c, data).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let w_ih = Matrix::<f64>::zeros(8, 3);
        let w_hh = Matrix::zeros(8, 2);
        let b = Matrix::zeros(8, 1);
        let x: Vec<f64> = (0..15).map(|k| k as f64 - 7.0).collect();
        let p = LstmParams { w_ih: Some(&w_ih), w_hh: &w_hh, b: &b };
        let tr = lstm_forward(p, Some(&x), &[0.0; 2], &[0.0; 2], 5);
        assert!(tr.last_hidden().iter().all(|&v| v == 0.0));
    }

    /// Gradient of `Σ_t <r_t, h_t> + <q, h_T>` against central differences.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = SeededRng::new(11);
        let (d, h, steps) = (3, 4, 6);
        let params = vec![random(&mut rng, 4 * h, d), random(&mut rng, 4 * h, h), random(&mut rng, 4 * h, 1)];
        let x = random(&mut rng, steps, d).into_vec();
        let r = random(&mut rng, steps, h).into_vec();
        let q = random(&mut rng, h, 1).into_vec();
        let h0 = random(&mut rng, h, 1).into_vec();
        let c0 = random(&mut rng, h, 1).into_vec();

        let objective = |ps: &[Matrix<f64>]| {
            let p = LstmParams { w_ih: Some(&ps[0]), w_hh: &ps[1], b: &ps[2] };
            let tr = lstm_forward(p, Some(&x), &h0, &c0, steps);
            let mut s = 0.0;
            for t in 0..steps {
                s += tr.hidden(t + 1).iter().zip(&r[t * h..]).map(|(a, b)| a * b).sum::<f64>();
            }
            s + tr.last_hidden().iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
        };
        let numeric = finite_difference_gradient(objective, &params, 1e-6).unwrap();

        let p = LstmParams { w_ih: Some(&params[0]), w_hh: &params[1], b: &params[2] };
        let tr = lstm_forward(p, Some(&x), &h0, &c0, steps);
        let mut g: Vec<Matrix<f64>> = params.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        let [g0, g1, g2] = &mut g[..] else { unreachable!() };
        let grads = LstmGrads { w_ih: Some(g0), w_hh: g1, b: g2 };
        let (dh0, dc0) = lstm_backward(p, &tr, Some(&x), Some(&r), &q, grads);
        let err = max_relative_error(&g, &numeric, 1e-8);
        assert!(err < 1e-6, "relative error {err}");

        // initial-state gradients
        let init = vec![Matrix::column_vector(h0.clone()), Matrix::column_vector(c0.clone())];
        let numeric_init = finite_difference_gradient(
            |s: &[Matrix<f64>]| {
                let tr = lstm_forward(p, Some(&x), s[0].as_slice(), s[1].as_slice(), steps);
                let mut v = 0.0;
                for t in 0..steps {
                    v += tr.hidden(t + 1).iter().zip(&r[t * h..]).map(|(a, b)| a * b).sum::<f64>();
                }
                v + tr.last_hidden().iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
            },
            &init,
            1e-6,
        )
        .unwrap();
        let analytic_init = vec![Matrix::column_vector(dh0), Matrix::column_vector(dc0)];
        assert!(max_relative_error(&analytic_init, &numeric_init, 1e-8) < 1e-6);
    }
}
