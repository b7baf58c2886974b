//! Seeded ensembles of small fully connected regressors.

mod format;
mod model;
mod network;
mod train;

pub use format::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use model::{
    predict_ensemble, train_ensemble, train_ensemble_with, EnsembleModel, Predictor, Schedule,
};
pub use network::{
    forward, init_network, mse, mse_with_gradient, tanh_activation, Activation, Layer, MlpSpec,
    NetworkParams,
};
pub use train::{train_network, train_network_with_outcome, TrainConfig, TrainOutcome};
