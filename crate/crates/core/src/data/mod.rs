//! Tabular regression data: loading, splitting, scaling and synthetic
//! ground-truth experiments.

mod io;
mod scaler;
mod split;
mod synthetic;

pub use io::{
    file_sha256, load_concrete, load_csv, write_csv, CONCRETE_COLUMNS, CONCRETE_ROWS,
    CONCRETE_SHA256,
};
pub use scaler::{ScalerPair, Standardizer};
pub use split::{split_indices, split_train_val, train_test_split, Split};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticSpec};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Feature matrix (row-major) with one regression target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    n_cols: usize,
    targets: Vec<T>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        features: Vec<T>,
        n_cols: usize,
        targets: Vec<T>,
        feature_names: Vec<String>,
        target_name: String,
    ) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::invalid("dataset needs at least one feature column"));
        }
        if features.len() != n_cols * targets.len() {
            return Err(Error::invalid(format!(
                "{} feature values do not form {} rows of {} columns",
                features.len(),
                targets.len(),
                n_cols
            )));
        }
        if feature_names.len() != n_cols {
            return Err(Error::invalid("one name per feature column required"));
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self {
            features,
            n_cols,
            targets,
            feature_names,
            target_name,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.features.iter().skip(j).step_by(self.n_cols).copied()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_cols);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Self {
            features,
            n_cols: self.n_cols,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    pub(crate) fn with_values(&self, features: Vec<T>, targets: Vec<T>) -> Self {
        Self {
            features,
            n_cols: self.n_cols,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}
