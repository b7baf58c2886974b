//! Kernel-density aggregation of bagging-ensemble regression predictions.
//!
//! An ensemble of independently seeded networks yields a set of predictions
//! per input. Instead of averaging them, [`kde::bagging_score`] samples a
//! truncated Gaussian density over the set and reports the location of its
//! peak (the representative prediction) together with the peak height, a
//! confidence score in `(0, 1]` that is exactly 1 when all members agree.
//!
//! The numerical code is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool and the model
//! file format use.

pub mod aggregate;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod kde;
pub mod metrics;
pub mod rng;
pub mod scalar;

pub use aggregate::{aggregate_mean, aggregate_median, Aggregator};
pub use error::{Error, Result};
pub use kde::{bagging_score, estimate_density, kernel, population_std};
pub use scalar::Scalar;

pub type PredictionSet = kde::PredictionSet<f64>;
pub type KdeConfig = kde::KdeConfig<f64>;
pub type DensityGrid = kde::DensityGrid<f64>;
pub type BaggingResult = kde::BaggingResult<f64>;
pub type Dataset = data::Dataset<f64>;
pub type NetworkParams = ensemble::NetworkParams<f64>;
pub type TrainConfig = ensemble::TrainConfig<f64>;
pub type EnsembleModel = ensemble::EnsembleModel<f64>;
pub type EvalReport = metrics::EvalReport<f64>;

pub type PredictionSet32 = kde::PredictionSet<f32>;
pub type KdeConfig32 = kde::KdeConfig<f32>;
pub type DensityGrid32 = kde::DensityGrid<f32>;
pub type BaggingResult32 = kde::BaggingResult<f32>;
