use crate::data::{split_train_val, Dataset};
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};
use crate::scalar::Scalar;

use super::network::{init_network, mse, MlpSpec, NetworkParams, Workspace};

/// Optimizer and stopping settings for one member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub learning_rate: T,
    pub batch_size: usize,
    /// Fraction of rows held out for early stopping.
    pub val_fraction: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: T::lit(1e-3),
            batch_size: 32,
            val_fraction: 0.3,
            patience: 50,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if !(self.learning_rate > T::zero() && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::invalid("validation fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Trained parameters plus the loss trajectory summary.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: NetworkParams<T>,
    pub epochs_run: usize,
    /// Epoch whose weights were kept (0 = initialization).
    pub best_epoch: usize,
    pub initial_train_loss: T,
    /// Mean per-sample loss seen during the last epoch.
    pub final_train_loss: T,
    pub best_val_loss: T,
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Scalar> Adam<T> {
    fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    fn step(&mut self, params: &mut NetworkParams<T>, grads: &NetworkParams<T>, lr: T) {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for (((p, &g), m), v) in params
            .values_mut()
            .zip(grads.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

fn zero_grads<T: Scalar>(grads: &mut NetworkParams<T>) {
    for g in grads.values_mut() {
        *g = T::zero();
    }
}

/// Fits one network to standardized data; see [`train_network_with_outcome`].
pub fn train_network<T: Scalar>(
    spec: &MlpSpec,
    seed: u64,
    data: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<NetworkParams<T>> {
    Ok(train_network_with_outcome(spec, seed, data, config)?.params)
}

/// Mini-batch Adam on mean squared error.
///
/// `seed` drives three independent streams: weight initialization, the
/// train/validation split of `data`, and per-epoch mini-batch order. The
/// weights with the lowest validation loss are returned.
pub fn train_network_with_outcome<T: Scalar>(
    spec: &MlpSpec,
    seed: u64,
    data: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if data.n_cols() != spec.input_dim {
        return Err(Error::invalid(format!(
            "dataset has {} features, network expects {}",
            data.n_cols(),
            spec.input_dim
        )));
    }
    let (train_idx, val_idx) = split_train_val(data.n_rows(), seed, config.val_fraction)?;
    let train = data.subset(&train_idx);
    let val = data.subset(&val_idx);
    let dim = spec.input_dim;

    let mut params: NetworkParams<T> = init_network(spec, seed);
    let mut grads = NetworkParams::zeros(spec, seed);
    let mut adam = Adam::new(spec.n_params());
    let mut ws = Workspace::new(spec);
    let mut order_rng = SeededRng::new(seed, Stream::Batches);
    let mut order: Vec<usize> = (0..train.n_rows()).collect();

    let initial_train_loss = mse(&params, spec, train.features(), train.targets());
    let mut best_val = mse(&params, spec, val.features(), val.targets());
    if !initial_train_loss.is_finite() || !best_val.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0, seed });
    }
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut final_train_loss = initial_train_loss;
    let mut epochs_run = 0;
    let two = T::lit(2.0);

    for epoch in 1..=config.epochs {
        order_rng.shuffle(&mut order);
        let mut epoch_loss = T::zero();
        for batch in order.chunks(config.batch_size) {
            zero_grads(&mut grads);
            let scale = two / T::from_count(batch.len());
            for &i in batch {
                let x = &train.features()[i * dim..(i + 1) * dim];
                let r = ws.forward(&params, spec, x) - train.targets()[i];
                epoch_loss = epoch_loss + r * r;
                ws.backward(&params, spec, scale * r, &mut grads);
            }
            adam.step(&mut params, &grads, config.learning_rate);
        }
        epochs_run = epoch;
        final_train_loss = epoch_loss / T::from_count(train.n_rows());
        let val_loss = mse(&params, spec, val.features(), val.targets());
        if !final_train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, seed });
        }
        if val_loss < best_val {
            best_val = val_loss;
            best.clone_from(&params);
            best_epoch = epoch;
        } else if config.patience > 0 && epoch - best_epoch >= config.patience {
            break;
        }
    }

    Ok(TrainOutcome {
        params: best,
        epochs_run,
        best_epoch,
        initial_train_loss,
        final_train_loss,
        best_val_loss: best_val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::network::{forward, Activation};

    fn linear_data(n: usize) -> Dataset<f64> {
        let xs: Vec<f64> = (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        Dataset::new(xs, 1, ys, vec!["x".into()], "y".into()).unwrap()
    }

    fn train_rmse(params: &NetworkParams<f64>, spec: &MlpSpec, data: &Dataset<f64>) -> f64 {
        let n = data.n_rows();
        let ss: f64 = (0..n)
            .map(|i| (forward(params, spec, data.row(i)).unwrap() - data.targets()[i]).powi(2))
            .sum();
        (ss / n as f64).sqrt()
    }

    #[test]
    fn fits_a_linear_target() {
        let data = linear_data(100);
        let spec = MlpSpec::alternating(1);
        let cfg = TrainConfig::default();
        let out = train_network_with_outcome(&spec, 1, &data, &cfg).unwrap();
        assert!(out.final_train_loss <= out.initial_train_loss);
        let rmse = train_rmse(&out.params, &spec, &data);
        assert!(rmse < 0.05, "rmse {rmse}");
    }

    #[test]
    fn fits_a_constant_target() {
        let c = 3.0;
        let xs: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let data = Dataset::new(xs, 1, vec![c; 60], vec!["x".into()], "y".into()).unwrap();
        let spec = MlpSpec::alternating(1);
        let params = train_network(&spec, 4, &data, &TrainConfig::default()).unwrap();
        let rmse = train_rmse(&params, &spec, &data);
        assert!(rmse < 0.05 * (1.0 + c), "rmse {rmse}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = linear_data(40);
        let spec = MlpSpec::alternating(1);
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let a = train_network(&spec, 11, &data, &cfg).unwrap();
        let b = train_network(&spec, 11, &data, &cfg).unwrap();
        let c = train_network(&spec, 12, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.seed, 11);
    }

    #[test]
    fn patience_stops_early() {
        let data = linear_data(40);
        let spec = MlpSpec::new(1, vec![4], vec![Activation::Linear]).unwrap();
        let cfg = TrainConfig {
            epochs: 10_000,
            learning_rate: 0.05,
            patience: 5,
            ..TrainConfig::default()
        };
        let out = train_network_with_outcome(&spec, 2, &data, &cfg).unwrap();
        assert!(out.epochs_run < 10_000);
        assert!(out.epochs_run - out.best_epoch <= 5);
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 1e3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * 1e150).collect();
        let data = Dataset::new(xs, 1, ys, vec!["x".into()], "y".into()).unwrap();
        let spec = MlpSpec::new(1, vec![4], vec![Activation::Linear]).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e3,
            ..TrainConfig::default()
        };
        match train_network(&spec, 3, &data, &cfg) {
            Err(Error::TrainingDiverged { seed: 3, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let data = linear_data(10);
        let spec = MlpSpec::alternating(1);
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                val_fraction: 1.0,
                ..TrainConfig::default()
            },
        ] {
            assert!(train_network(&spec, 1, &data, &cfg).is_err());
        }
    }
}
