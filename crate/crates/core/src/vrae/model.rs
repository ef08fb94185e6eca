//! Forward pass, loss, and analytic gradients of the variational recurrent
//! autoencoder over batches of windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{add_column_sums, gemm, sigmoid, softplus, MatRef, Matrix, SeededRng};
use crate::scalar::Scalar;
use crate::vrae::lstm::{lstm_backward, lstm_forward, LstmGrads, LstmParams, LstmTrace};
use crate::vrae::VraeWeights;

/// Lower bound added to the softplus standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// One draw from the approximate posterior via `z = mu + sigma ⊙ epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LatentSample<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
    pub epsilon: Vec<T>,
    pub z: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LossParts<T> {
    pub total: T,
    pub recon: T,
    pub kl: T,
}

impl<T: Scalar> LossParts<T> {
    pub fn zero() -> Self {
        LossParts {
            total: T::zero(),
            recon: T::zero(),
            kl: T::zero(),
        }
    }

    pub fn add(&mut self, other: &LossParts<T>) {
        self.total += other.total;
        self.recon += other.recon;
        self.kl += other.kl;
    }

    pub fn scaled(&self, s: T) -> Self {
        LossParts {
            total: self.total * s,
            recon: self.recon * s,
            kl: self.kl * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.recon.is_finite() && self.kl.is_finite()
    }
}

fn dims<T: Scalar>(w: &VraeWeights<T>) -> (usize, usize, usize) {
    (w.enc_w_ih.cols(), w.enc_w_hh.cols(), w.mu_w.rows())
}

fn encoder_params<T: Scalar>(w: &VraeWeights<T>) -> LstmParams<'_, T> {
    LstmParams {
        w_ih: Some(&w.enc_w_ih),
        w_hh: &w.enc_w_hh,
        b: &w.enc_b,
    }
}

fn decoder_params<T: Scalar>(w: &VraeWeights<T>) -> LstmParams<'_, T> {
    LstmParams {
        w_ih: None,
        w_hh: &w.dec_w_hh,
        b: &w.dec_b,
    }
}

fn check_windows<T>(windows: &[&[T]], steps: usize, d: usize, context: &'static str) -> Result<()> {
    if let Some(bad) = windows.iter().find(|w| w.len() != steps * d) {
        return Err(Error::shape(context, format!("{steps}x{d} window"), format!("{} values", bad.len())));
    }
    Ok(())
}

/// Interleaves `steps x D` windows into a time-major `steps x B x D` block.
fn to_time_major<T: Scalar>(windows: &[&[T]], steps: usize, d: usize) -> Vec<T> {
    let b = windows.len();
    let mut out = vec![T::zero(); steps * b * d];
    for (i, w) in windows.iter().enumerate() {
        for t in 0..steps {
            out[(t * b + i) * d..(t * b + i + 1) * d].copy_from_slice(&w[t * d..(t + 1) * d]);
        }
    }
    out
}

/// Extracts sequence `i` (`steps x D`) from a time-major block of `b` sequences.
fn from_time_major<T: Scalar>(block: &[T], steps: usize, b: usize, d: usize, i: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(steps * d);
    for t in 0..steps {
        out.extend_from_slice(&block[(t * b + i) * d..(t * b + i + 1) * d]);
    }
    out
}

/// `X W^T + b` for every row of a `rows x in` block.
fn affine_rows<T: Scalar>(w: &Matrix<T>, b: &Matrix<T>, x: &[T], rows: usize) -> Vec<T> {
    let out_dim = w.rows();
    let mut out = Vec::with_capacity(rows * out_dim);
    for _ in 0..rows {
        out.extend_from_slice(b.as_slice());
    }
    gemm(T::one(), MatRef::new(x, rows, w.cols()), w.view().t(), T::one(), &mut out);
    out
}

/// Runs the encoder LSTM over a `steps x D` window from zero state.
pub fn encoder_forward<T: Scalar>(
    w: &VraeWeights<T>,
    window: &[T],
    steps: usize,
) -> Result<LstmTrace<T>> {
    let (d, h, _) = dims(w);
    check_windows(&[window], steps, d, "encoder_forward")?;
    let zeros = vec![T::zero(); h];
    Ok(lstm_forward(encoder_params(w), Some(window), &zeros, &zeros, steps))
}

fn encode_block<T: Scalar>(w: &VraeWeights<T>, x: &[T], batch: usize, steps: usize) -> LstmTrace<T> {
    let zeros = vec![T::zero(); batch * w.enc_w_hh.cols()];
    lstm_forward(encoder_params(w), Some(x), &zeros, &zeros, steps)
}

/// `(mu, sigma pre-activation, sigma)` for a `rows x H` block of encoder outputs.
fn posterior_heads<T: Scalar>(w: &VraeWeights<T>, h: &[T], rows: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mu = affine_rows(&w.mu_w, &w.mu_b, h, rows);
    let pre = affine_rows(&w.sigma_w, &w.sigma_b, h, rows);
    let floor = T::lit(SIGMA_FLOOR);
    let sigma = pre.iter().map(|&s| softplus(s) + floor).collect();
    (mu, pre, sigma)
}

/// Mean (affine head) and standard deviation (softplus head plus floor).
pub fn posterior_params<T: Scalar>(w: &VraeWeights<T>, h: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let (_, hidden, _) = dims(w);
    if h.len() != hidden {
        return Err(Error::shape("posterior_params", hidden, h.len()));
    }
    let (mu, _, sigma) = posterior_heads(w, h, 1);
    Ok((mu, sigma))
}

/// Posterior means of a batch of windows as a row-major `B x latent` block.
pub(crate) fn posterior_means<T: Scalar>(w: &VraeWeights<T>, windows: &[&[T]], steps: usize) -> Result<Vec<T>> {
    let (d, _, _) = dims(w);
    check_windows(windows, steps, d, "encode")?;
    let x = to_time_major(windows, steps, d);
    let trace = encode_block(w, &x, windows.len(), steps);
    Ok(posterior_heads(w, trace.last_hidden(), windows.len()).0)
}

/// Reparametrized sample with caller-supplied noise.
pub fn reparameterize_with<T: Scalar>(mu: &[T], sigma: &[T], epsilon: &[T]) -> Result<LatentSample<T>> {
    if mu.len() != sigma.len() || mu.len() != epsilon.len() {
        return Err(Error::shape(
            "reparameterize",
            mu.len(),
            format!("sigma {} / epsilon {}", sigma.len(), epsilon.len()),
        ));
    }
    if let Some(s) = sigma.iter().find(|&&s| !(s > T::zero())) {
        if s.is_nan() {
            return Err(Error::NonFinite("posterior sigma is NaN".into()));
        }
        return Err(Error::invalid(format!("sigma must be positive, got {s}")));
    }
    let z = mu
        .iter()
        .zip(sigma)
        .zip(epsilon)
        .map(|((&m, &s), &e)| m + s * e)
        .collect();
    Ok(LatentSample {
        mu: mu.to_vec(),
        sigma: sigma.to_vec(),
        epsilon: epsilon.to_vec(),
        z,
    })
}

/// Reparametrized sample with `epsilon ~ N(0, I)` drawn from `rng`.
pub fn reparameterize<T: Scalar>(mu: &[T], sigma: &[T], rng: &mut SeededRng) -> Result<LatentSample<T>> {
    let eps: Vec<T> = (0..mu.len()).map(|_| T::lit(rng.standard_normal())).collect();
    reparameterize_with(mu, sigma, &eps)
}

/// Decodes a `B x latent` block; the reconstruction is time-major `steps x B x D`.
fn decode_block<T: Scalar>(w: &VraeWeights<T>, z: &[T], batch: usize, steps: usize) -> (Vec<T>, LstmTrace<T>) {
    let h0 = affine_rows(&w.init_h_w, &w.init_h_b, z, batch);
    let c0 = affine_rows(&w.init_c_w, &w.init_c_b, z, batch);
    let trace = lstm_forward(decoder_params(w), None, &h0, &c0, steps);
    let recon = affine_rows(&w.out_w, &w.out_b, trace.outputs(), steps * batch);
    (recon, trace)
}

/// Reconstruction `x̂` (`steps x D`) from a latent vector.
pub fn decoder_forward<T: Scalar>(w: &VraeWeights<T>, z: &[T], steps: usize) -> Result<Matrix<T>> {
    let (d, _, latent) = dims(w);
    if z.len() != latent {
        return Err(Error::shape("decoder_forward", latent, z.len()));
    }
    let (out, _) = decode_block(w, z, 1, steps);
    Matrix::from_vec(steps, d, out)
}

/// `KL(N(mu, diag(sigma^2)) || N(0, I))`.
pub fn kl_divergence<T: Scalar>(mu: &[T], sigma: &[T]) -> Result<T> {
    if mu.len() != sigma.len() {
        return Err(Error::shape("kl_divergence", mu.len(), sigma.len()));
    }
    let mut acc = T::zero();
    for (&m, &s) in mu.iter().zip(sigma) {
        if !(s > T::zero()) {
            return Err(Error::invalid(format!("sigma must be positive, got {s}")));
        }
        let s2 = s * s;
        acc += m * m + s2 - s2.ln() - T::one();
    }
    Ok(T::lit(0.5) * acc)
}

/// Mean squared reconstruction error plus `beta`-weighted KL.
pub fn loss<T: Scalar>(x: &[T], x_hat: &[T], mu: &[T], sigma: &[T], beta: T) -> Result<LossParts<T>> {
    if x.len() != x_hat.len() {
        return Err(Error::shape("loss", x.len(), x_hat.len()));
    }
    if !(beta >= T::zero()) {
        return Err(Error::invalid(format!("beta must be >= 0, got {beta}")));
    }
    let recon = if x.is_empty() {
        T::zero()
    } else {
        x.iter()
            .zip(x_hat)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            / T::from_usize_lossy(x.len())
    };
    let kl = kl_divergence(mu, sigma)?;
    Ok(LossParts {
        total: recon + beta * kl,
        recon,
        kl,
    })
}

/// Per-window randomness for one training step.
#[derive(Clone, Debug)]
pub struct SampleNoise<T> {
    pub epsilon: Vec<T>,
    /// Inverted-dropout multipliers on the final encoder hidden state
    /// (`0` or `1 / (1 - p)`); `None` disables dropout.
    pub dropout_mask: Option<Vec<T>>,
}

impl<T: Scalar> SampleNoise<T> {
    pub fn deterministic(latent_dim: usize) -> Self {
        SampleNoise {
            epsilon: vec![T::zero(); latent_dim],
            dropout_mask: None,
        }
    }

    pub fn draw(rng: &mut SeededRng, latent_dim: usize, hidden: usize, dropout: f64) -> Self {
        let epsilon = (0..latent_dim).map(|_| T::lit(rng.standard_normal())).collect();
        let dropout_mask = (dropout > 0.0).then(|| {
            let keep = T::lit(1.0 / (1.0 - dropout));
            (0..hidden)
                .map(|_| if rng.uniform() < dropout { T::zero() } else { keep })
                .collect()
        });
        SampleNoise { epsilon, dropout_mask }
    }
}

/// Every intermediate of a training-mode forward pass over a batch.
pub struct ForwardPass<'a, T> {
    windows: Vec<&'a [T]>,
    steps: usize,
    /// Time-major `steps x B x D` copy of the inputs.
    x: Vec<T>,
    encoder: LstmTrace<T>,
    /// `B x H` encoder output after dropout.
    h_enc: Vec<T>,
    /// `B x latent`
    sigma_pre: Vec<T>,
    latents: Vec<LatentSample<T>>,
    decoder: LstmTrace<T>,
    /// Time-major `steps x B x D`.
    recon: Vec<T>,
    /// `B x H` dropout multipliers.
    masks: Option<Vec<T>>,
}

impl<T: Scalar> ForwardPass<'_, T> {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn latent(&self, i: usize) -> &LatentSample<T> {
        &self.latents[i]
    }

    /// Reconstruction of window `i`, `steps x D` row-major.
    pub fn reconstruction(&self, i: usize) -> Vec<T> {
        let d = self.x.len() / (self.steps * self.len()).max(1);
        from_time_major(&self.recon, self.steps, self.len(), d, i)
    }

    pub fn loss(&self, i: usize, beta: T) -> Result<LossParts<T>> {
        let lat = &self.latents[i];
        loss(self.windows[i], &self.reconstruction(i), &lat.mu, &lat.sigma, beta)
    }

    /// Mean of the per-window losses.
    pub fn mean_loss(&self, beta: T) -> Result<LossParts<T>> {
        let mut acc = LossParts::zero();
        for i in 0..self.len() {
            acc.add(&self.loss(i, beta)?);
        }
        Ok(acc.scaled(T::one() / T::from_usize_lossy(self.len().max(1))))
    }
}

/// Training-mode forward pass over a batch of `steps x D` windows, one
/// noise draw per window.
pub fn forward<'a, T: Scalar>(
    w: &VraeWeights<T>,
    windows: &[&'a [T]],
    steps: usize,
    noises: &[SampleNoise<T>],
) -> Result<ForwardPass<'a, T>> {
    let (d, h, latent) = dims(w);
    let batch = windows.len();
    if noises.len() != batch {
        return Err(Error::shape("forward noise", batch, noises.len()));
    }
    check_windows(windows, steps, d, "forward")?;
    let x = to_time_major(windows, steps, d);
    let encoder = encode_block(w, &x, batch, steps);
    let mut h_enc = encoder.last_hidden().to_vec();

    let with_mask = noises.iter().filter(|n| n.dropout_mask.is_some()).count();
    let masks = if with_mask == 0 {
        None
    } else if with_mask < batch {
        return Err(Error::invalid("dropout masks must be given for all windows of a batch or none"));
    } else {
        let mut m = Vec::with_capacity(batch * h);
        for n in noises {
            let mask = n.dropout_mask.as_deref().unwrap_or_default();
            if mask.len() != h {
                return Err(Error::shape("dropout mask", h, mask.len()));
            }
            m.extend_from_slice(mask);
        }
        h_enc.iter_mut().zip(&m).for_each(|(v, &k)| *v *= k);
        Some(m)
    };

    let (mu, sigma_pre, sigma) = posterior_heads(w, &h_enc, batch);
    let mut latents = Vec::with_capacity(batch);
    let mut z = Vec::with_capacity(batch * latent);
    for (i, noise) in noises.iter().enumerate() {
        let r = i * latent..(i + 1) * latent;
        let s = reparameterize_with(&mu[r.clone()], &sigma[r], &noise.epsilon)?;
        z.extend_from_slice(&s.z);
        latents.push(s);
    }
    let (recon, decoder) = decode_block(w, &z, batch, steps);
    Ok(ForwardPass {
        windows: windows.to_vec(),
        steps,
        x,
        encoder,
        h_enc,
        sigma_pre,
        latents,
        decoder,
        recon,
        masks,
    })
}

/// Adds `scale * Σ_i ∂loss_i/∂θ` over the batch into `grads`.
pub fn backward<T: Scalar>(
    w: &VraeWeights<T>,
    fwd: &ForwardPass<'_, T>,
    beta: T,
    scale: T,
    grads: &mut VraeWeights<T>,
) {
    let (d, h, latent) = dims(w);
    let (steps, batch) = (fwd.steps, fwd.len());
    let rows = steps * batch;
    let one = T::one();
    let zero = T::zero();

    // reconstruction head
    let coef = scale * T::lit(2.0) / T::from_usize_lossy((steps * d).max(1));
    let dy: Vec<T> = fwd
        .recon
        .iter()
        .zip(&fwd.x)
        .map(|(&r, &x)| coef * (r - x))
        .collect();
    add_column_sums(&dy, d, grads.out_b.as_mut_slice());
    let dy_ref = MatRef::new(&dy, rows, d);
    gemm(one, dy_ref.t(), MatRef::new(fwd.decoder.outputs(), rows, h), one, grads.out_w.as_mut_slice());
    let mut dh_dec = vec![zero; rows * h];
    gemm(one, dy_ref, w.out_w.view(), zero, &mut dh_dec);

    let zeros = vec![zero; batch * h];
    let (dh0, dc0) = lstm_backward(
        decoder_params(w),
        &fwd.decoder,
        None,
        Some(&dh_dec),
        &zeros,
        LstmGrads {
            w_ih: None,
            w_hh: &mut grads.dec_w_hh,
            b: &mut grads.dec_b,
        },
    );

    // latent to decoder initial state
    let z: Vec<T> = fwd.latents.iter().flat_map(|l| l.z.iter().copied()).collect();
    let z_ref = MatRef::new(&z, batch, latent);
    let (dh0_ref, dc0_ref) = (MatRef::new(&dh0, batch, h), MatRef::new(&dc0, batch, h));
    add_column_sums(&dh0, h, grads.init_h_b.as_mut_slice());
    gemm(one, dh0_ref.t(), z_ref, one, grads.init_h_w.as_mut_slice());
    add_column_sums(&dc0, h, grads.init_c_b.as_mut_slice());
    gemm(one, dc0_ref.t(), z_ref, one, grads.init_c_w.as_mut_slice());
    let mut dz = vec![zero; batch * latent];
    gemm(one, dh0_ref, w.init_h_w.view(), zero, &mut dz);
    gemm(one, dc0_ref, w.init_c_w.view(), one, &mut dz);

    // reparametrization and KL
    let kl_coef = scale * beta;
    let mut dmu = vec![zero; batch * latent];
    let mut dsig = vec![zero; batch * latent];
    for (i, lat) in fwd.latents.iter().enumerate() {
        for k in 0..latent {
            let j = i * latent + k;
            let s = lat.sigma[k];
            dmu[j] = dz[j] + kl_coef * lat.mu[k];
            let ds = dz[j] * lat.epsilon[k] + kl_coef * (s - one / s);
            dsig[j] = ds * sigmoid(fwd.sigma_pre[j]);
        }
    }
    let h_ref = MatRef::new(&fwd.h_enc, batch, h);
    let (dmu_ref, dsig_ref) = (MatRef::new(&dmu, batch, latent), MatRef::new(&dsig, batch, latent));
    add_column_sums(&dmu, latent, grads.mu_b.as_mut_slice());
    gemm(one, dmu_ref.t(), h_ref, one, grads.mu_w.as_mut_slice());
    add_column_sums(&dsig, latent, grads.sigma_b.as_mut_slice());
    gemm(one, dsig_ref.t(), h_ref, one, grads.sigma_w.as_mut_slice());

    let mut dh_enc = vec![zero; batch * h];
    gemm(one, dmu_ref, w.mu_w.view(), zero, &mut dh_enc);
    gemm(one, dsig_ref, w.sigma_w.view(), one, &mut dh_enc);
    if let Some(mask) = &fwd.masks {
        dh_enc.iter_mut().zip(mask).for_each(|(v, &m)| *v *= m);
    }

    lstm_backward(
        encoder_params(w),
        &fwd.encoder,
        Some(&fwd.x),
        None,
        &dh_enc,
        LstmGrads {
            w_ih: Some(&mut grads.enc_w_ih),
            w_hh: &mut grads.enc_w_hh,
            b: &mut grads.enc_b,
        },
    );
}

/// Mean loss over a batch with fixed noise; the objective `backward` differentiates.
pub fn batch_objective<T: Scalar>(
    w: &VraeWeights<T>,
    windows: &[&[T]],
    steps: usize,
    noises: &[SampleNoise<T>],
    beta: T,
) -> Result<LossParts<T>> {
    if windows.is_empty() {
        return Ok(LossParts::zero());
    }
    forward(w, windows, steps, noises)?.mean_loss(beta)
}

/// Windows per independently processed slice of a batch. Fixed, so the
/// reduction order does not depend on the thread count.
const CHUNK: usize = 32;

/// Mean loss and its gradient over a batch. Fixed-size slices of the batch
/// may run in parallel; their gradients are summed in slice order.
pub fn batch_gradients<T: Scalar>(
    w: &VraeWeights<T>,
    windows: &[&[T]],
    steps: usize,
    noises: &[SampleNoise<T>],
    beta: T,
) -> Result<(VraeWeights<T>, LossParts<T>)> {
    use rayon::prelude::*;

    if windows.len() != noises.len() {
        return Err(Error::shape("batch_gradients noise", windows.len(), noises.len()));
    }
    let scale = T::one() / T::from_usize_lossy(windows.len().max(1));
    let per_chunk: Vec<Result<(VraeWeights<T>, LossParts<T>)>> = windows
        .par_chunks(CHUNK)
        .zip(noises.par_chunks(CHUNK))
        .map(|(xs, ns)| {
            let fwd = forward(w, xs, steps, ns)?;
            let mut parts = LossParts::zero();
            for i in 0..fwd.len() {
                parts.add(&fwd.loss(i, beta)?);
            }
            let mut g = w.zeros_like();
            backward(w, &fwd, beta, scale, &mut g);
            Ok((g, parts))
        })
        .collect();

    let mut grads = w.zeros_like();
    let mut total = LossParts::zero();
    for item in per_chunk {
        let (g, parts) = item?;
        grads.accumulate(&g);
        total.add(&parts);
    }
    Ok((grads, total.scaled(scale)))
}
