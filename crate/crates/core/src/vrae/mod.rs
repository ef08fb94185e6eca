//! Variational recurrent autoencoder: LSTM encoder to a diagonal Gaussian
//! posterior, reparametrized sampling, LSTM decoder, MSE + β·KL objective,
//! and analytic backpropagation through time.

mod config;
mod encode;
mod lstm;
mod model;
mod train;
mod weights;

pub use config::{beta_at, AnnealMode, AnnealSchedule, VraeConfig};
pub use encode::{encode_dataset, latent_line_report, ClassLines, LatentLineReport, LatentSet};
pub use lstm::LstmTrace;
pub use model::{
    backward, batch_gradients, batch_objective, decoder_forward, encoder_forward, forward,
    kl_divergence, loss, posterior_params, reparameterize, reparameterize_with, ForwardPass,
    LatentSample, LossParts, SampleNoise, SIGMA_FLOOR,
};
pub use train::{evaluate, train, train_with_progress, train_with_validation_every, Checkpoint, EpochStats};
pub use weights::{VraeWeights, TENSOR_COUNT, TENSOR_NAMES};
