use std::collections::BTreeMap;

use rayon::prelude::*;

use super::network::{MlpSpec, NetworkParams, Workspace};
use super::train::{train_network, TrainConfig};
use crate::data::{Dataset, ScalerPair};
use crate::error::{Error, Result};
use crate::kde::PredictionSet;
use crate::scalar::Scalar;

/// Anything that maps one feature vector to a set of member predictions.
pub trait Predictor<T: Scalar>: Sync {
    fn input_dim(&self) -> usize;

    fn predict(&self, x: &[T]) -> Result<PredictionSet<T>>;
}

/// Trained members sharing one topology and one pair of scalers.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<T> {
    pub spec: MlpSpec,
    pub members: Vec<NetworkParams<T>>,
    /// Fitted on the rows the members were trained on.
    pub scalers: ScalerPair<T>,
    /// Free-form provenance (split seed, dataset checksum, ...).
    pub metadata: BTreeMap<String, String>,
}

impl<T: Scalar> EnsembleModel<T> {
    pub fn new(
        spec: MlpSpec,
        members: Vec<NetworkParams<T>>,
        scalers: ScalerPair<T>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one member"));
        }
        for m in &members {
            m.check_shapes(&spec)?;
        }
        if scalers.features.dim() != spec.input_dim || scalers.target.dim() != 1 {
            return Err(Error::invalid(
                "scaler dimensions do not match the topology",
            ));
        }
        Ok(Self {
            spec,
            members,
            scalers,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.seed).collect()
    }
}

impl<T: Scalar> Predictor<T> for EnsembleModel<T> {
    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn predict(&self, x: &[T]) -> Result<PredictionSet<T>> {
        predict_ensemble(self, x)
    }
}

/// How members are scheduled; both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    Sequential,
    #[default]
    Parallel,
}

/// Trains members with seeds `1..=n_members` on `data` (raw units).
pub fn train_ensemble<T: Scalar>(
    spec: &MlpSpec,
    n_members: usize,
    data: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<EnsembleModel<T>> {
    let seeds: Vec<u64> = (1..=n_members as u64).collect();
    train_ensemble_with(spec, &seeds, data, config, Schedule::Parallel)
}

/// Standardizes `data` with statistics of its own rows, then trains one
/// member per seed. Member order follows `seeds` regardless of schedule.
pub fn train_ensemble_with<T: Scalar>(
    spec: &MlpSpec,
    seeds: &[u64],
    data: &Dataset<T>,
    config: &TrainConfig<T>,
    schedule: Schedule,
) -> Result<EnsembleModel<T>> {
    if seeds.is_empty() {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    config.validate()?;
    let scalers = ScalerPair::fit(data);
    let scaled = scalers.apply(data);
    let train_one = |(i, &seed): (usize, &u64)| {
        log::debug!("training member {} (seed {seed})", i + 1);
        train_network(spec, seed, &scaled, config).map_err(|e| Error::Member {
            member: i + 1,
            source: Box::new(e),
        })
    };
    let members = match schedule {
        Schedule::Sequential => seeds
            .iter()
            .enumerate()
            .map(train_one)
            .collect::<Result<Vec<_>>>()?,
        Schedule::Parallel => seeds
            .par_iter()
            .enumerate()
            .map(train_one)
            .collect::<Result<Vec<_>>>()?,
    };
    EnsembleModel::new(spec.clone(), members, scalers)
}

/// Member predictions for `x` in raw target units, in member order.
pub fn predict_ensemble<T: Scalar>(model: &EnsembleModel<T>, x: &[T]) -> Result<PredictionSet<T>> {
    let spec = &model.spec;
    if x.len() != spec.input_dim {
        return Err(Error::invalid(format!(
            "expected {} features, got {}",
            spec.input_dim,
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("input contains a non-finite value"));
    }
    let mut z = x.to_vec();
    model.scalers.features.apply(&mut z);
    let mut ws = Workspace::new(spec);
    let values = model
        .members
        .iter()
        .map(|m| model.scalers.target.invert_one(ws.forward(m, spec, &z), 0))
        .collect();
    PredictionSet::with_seeds(values, model.seeds())
}
