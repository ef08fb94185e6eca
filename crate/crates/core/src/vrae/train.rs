use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, clip_global_norm, AdamState, SeededRng};
use crate::scalar::Scalar;
use crate::vrae::model::{batch_gradients, batch_objective, LossParts, SampleNoise};
use crate::vrae::{beta_at, VraeConfig, VraeWeights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// KL weight in effect for the last batch of the epoch.
    pub beta: f64,
    /// Batch-size-weighted mean of the training-mode batch losses.
    pub train: LossParts<f64>,
    /// Inference-mode loss (no dropout, `z = mu`) on the validation set.
    pub validation: Option<LossParts<f64>>,
}

/// Trained (or freshly initialised) model plus everything needed to inspect
/// or resume it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Checkpoint<T> {
    pub config: VraeConfig,
    pub weights: VraeWeights<T>,
    pub optimizer: AdamState<T>,
    pub epoch: usize,
    pub history: Vec<EpochStats>,
}

impl<T: Scalar> Artifact for Checkpoint<T> {
    const KIND: &'static str = "vrae-checkpoint";
    const VERSION: u32 = 1;
}

impl<T: Scalar> Checkpoint<T> {
    /// Untrained model with seeded initial weights.
    pub fn initial(config: &VraeConfig) -> Result<Self> {
        config.validate()?;
        let root = SeededRng::new(config.seed);
        let weights = VraeWeights::init(config, &mut root.fork(0));
        let optimizer = AdamState::new(weights.tensors());
        Ok(Checkpoint {
            config: config.clone(),
            weights,
            optimizer,
            epoch: 0,
            history: Vec::new(),
        })
    }

    /// Shape and version checks applied after loading from disk.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.weights.validate(&self.config)?;
        self.optimizer.check_shapes(self.weights.tensors())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let ckpt: Self = crate::artifact::load(path)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::artifact::save(self, path)
    }
}

fn check_dataset<T: Scalar>(config: &VraeConfig, data: &WindowedDataset<T>, what: &str) -> Result<()> {
    if data.n_features() != config.input_dim {
        return Err(Error::shape(
            "train",
            format!("{} features", config.input_dim),
            format!("{} in {what} set", data.n_features()),
        ));
    }
    Ok(())
}

/// Windows per forward block during evaluation and encoding.
pub(crate) const EVAL_BLOCK: usize = 64;

/// Inference-mode mean loss over `data`.
pub fn evaluate<T: Scalar>(weights: &VraeWeights<T>, data: &WindowedDataset<T>, beta: T) -> Result<LossParts<T>> {
    let latent = weights.mu_w.rows();
    let windows: Vec<&[T]> = data.windows().collect();
    let mut acc = LossParts::zero();
    for chunk in windows.chunks(EVAL_BLOCK) {
        let noises = vec![SampleNoise::deterministic(latent); chunk.len()];
        let part = batch_objective(weights, chunk, data.window_length, &noises, beta)?;
        acc.add(&part.scaled(T::from_usize_lossy(chunk.len())));
    }
    Ok(acc.scaled(T::one() / T::from_usize_lossy(windows.len().max(1))))
}

fn to_f64<T: Scalar>(p: LossParts<T>) -> LossParts<f64> {
    LossParts {
        total: p.total.to_f64_lossy(),
        recon: p.recon.to_f64_lossy(),
        kl: p.kl.to_f64_lossy(),
    }
}

/// Full training run: seeded shuffling, mini-batches, annealed KL weight,
/// global-norm clipping and Adam. Deterministic for a fixed config.
pub fn train<T: Scalar>(
    config: &VraeConfig,
    train_set: &WindowedDataset<T>,
    validation: Option<&WindowedDataset<T>>,
) -> Result<Checkpoint<T>> {
    train_with_progress(config, train_set, validation, |_| {})
}

pub fn train_with_progress<T: Scalar>(
    config: &VraeConfig,
    train_set: &WindowedDataset<T>,
    validation: Option<&WindowedDataset<T>>,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<Checkpoint<T>> {
    train_with_validation_every(config, train_set, validation, 1, on_epoch)
}

/// Like [`train_with_progress`], but the validation set is only scored every
/// `every` epochs and after the last one. `every = 0` never scores it.
pub fn train_with_validation_every<T: Scalar>(
    config: &VraeConfig,
    train_set: &WindowedDataset<T>,
    validation: Option<&WindowedDataset<T>>,
    every: usize,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Checkpoint<T>> {
    let mut ckpt = Checkpoint::initial(config)?;
    if config.epochs == 0 {
        return Ok(ckpt);
    }
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    check_dataset(config, train_set, "training")?;
    if let Some(v) = validation {
        check_dataset(config, v, "validation")?;
    }

    let mut rng = SeededRng::new(config.seed).fork(1);
    let n = train_set.len();
    let steps = train_set.window_length;
    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = config.epochs * batches_per_epoch;
    let lr = T::lit(config.learning_rate);
    let clip = T::lit(config.clip_norm);
    let mut global_step = 0;

    for epoch in 0..config.epochs {
        let order = rng.permutation(n);
        let mut sum = LossParts::<T>::zero();
        let mut beta = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            beta = beta_at(&config.anneal, global_step, total_steps)?;
            let windows: Vec<&[T]> = chunk.iter().map(|&i| train_set.window(i)).collect();
            let noises: Vec<SampleNoise<T>> = chunk
                .iter()
                .map(|_| {
                    SampleNoise::draw(&mut rng, config.latent_dim, config.hidden_units, config.dropout_rate)
                })
                .collect();
            let (mut grads, parts) = batch_gradients(&ckpt.weights, &windows, steps, &noises, T::lit(beta))
                .map_err(|e| match e {
                    Error::NonFinite(m) => {
                        Error::NonFinite(format!("training loss diverged at epoch {epoch}, batch {b}: {m}"))
                    }
                    other => other,
                })?;
            if !parts.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss diverged at epoch {epoch}, batch {b}"
                )));
            }
            clip_global_norm(&mut grads.tensors_mut(), clip)?;
            let grad_refs = grads.tensors();
            adam_step(&mut ckpt.weights.tensors_mut(), &grad_refs, &mut ckpt.optimizer, lr)?;
            sum.add(&parts.scaled(T::from_usize_lossy(chunk.len())));
            global_step += 1;
        }
        if !ckpt.weights.is_finite() {
            return Err(Error::NonFinite(format!("weights diverged in epoch {epoch}")));
        }
        let due = every > 0 && ((epoch + 1) % every == 0 || epoch + 1 == config.epochs);
        let validation_loss = match validation {
            Some(v) if due && !v.is_empty() => Some(to_f64(evaluate(&ckpt.weights, v, T::lit(beta))?)),
            _ => None,
        };
        let stats = EpochStats {
            epoch,
            beta,
            train: to_f64(sum.scaled(T::one() / T::from_usize_lossy(n))),
            validation: validation_loss,
        };
        on_epoch(&stats);
        ckpt.history.push(stats);
        ckpt.epoch = epoch + 1;
    }
    Ok(ckpt)
}
