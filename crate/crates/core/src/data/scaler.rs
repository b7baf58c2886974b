use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-column z-score transform with population standard deviation.
/// Constant columns get scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn new(mean: Vec<T>, scale: Vec<T>) -> Result<Self> {
        if mean.len() != scale.len() {
            return Err(Error::invalid("scaler mean and scale lengths differ"));
        }
        if scale.iter().any(|&s| !(s > T::zero() && s.is_finite()))
            || mean.iter().any(|m| !m.is_finite())
        {
            return Err(Error::invalid(
                "scaler needs finite means and positive scales",
            ));
        }
        Ok(Self { mean, scale })
    }

    /// Fits on a row-major matrix with `n_cols` columns.
    pub fn fit(values: &[T], n_cols: usize) -> Self {
        let n_rows = values.len() / n_cols;
        let n = T::from_count(n_rows.max(1));
        let mut mean = vec![T::zero(); n_cols];
        for row in values.chunks_exact(n_cols) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); n_cols];
        for row in values.chunks_exact(n_cols) {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::zero() && sd.is_finite() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, values: &mut [T]) {
        let d = self.dim();
        for (k, v) in values.iter_mut().enumerate() {
            *v = (*v - self.mean[k % d]) / self.scale[k % d];
        }
    }

    pub fn invert(&self, values: &mut [T]) {
        let d = self.dim();
        for (k, v) in values.iter_mut().enumerate() {
            *v = *v * self.scale[k % d] + self.mean[k % d];
        }
    }

    pub fn apply_one(&self, value: T, column: usize) -> T {
        (value - self.mean[column]) / self.scale[column]
    }

    pub fn invert_one(&self, value: T, column: usize) -> T {
        value * self.scale[column] + self.mean[column]
    }
}

/// Feature and target standardizers fitted on the same rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerPair<T> {
    pub features: Standardizer<T>,
    pub target: Standardizer<T>,
}

impl<T: Scalar> ScalerPair<T> {
    pub fn fit(data: &Dataset<T>) -> Self {
        Self {
            features: Standardizer::fit(data.features(), data.n_cols()),
            target: Standardizer::fit(data.targets(), 1),
        }
    }

    pub fn apply(&self, data: &Dataset<T>) -> Dataset<T> {
        let mut x = data.features().to_vec();
        let mut y = data.targets().to_vec();
        self.features.apply(&mut x);
        self.target.apply(&mut y);
        data.with_values(x, y)
    }

    pub fn invert(&self, data: &Dataset<T>) -> Dataset<T> {
        let mut x = data.features().to_vec();
        let mut y = data.targets().to_vec();
        self.features.invert(&mut x);
        self.target.invert(&mut y);
        data.with_values(x, y)
    }
}
