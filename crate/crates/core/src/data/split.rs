use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};
use crate::scalar::Scalar;

/// Row indices of a two-way partition, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub kept: Vec<usize>,
    pub held_out: Vec<usize>,
}

/// Randomly holds out `round(fraction * n_rows)` rows.
pub fn split_indices(n_rows: usize, seed: u64, fraction: f64, stream: Stream) -> Result<Split> {
    if n_rows < 2 {
        return Err(Error::invalid(format!("cannot split {n_rows} rows")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "split fraction {fraction} outside (0, 1)"
        )));
    }
    let n_held = (fraction * n_rows as f64).round() as usize;
    if n_held == 0 || n_held == n_rows {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n_rows} rows leaves an empty side"
        )));
    }
    let perm = SeededRng::new(seed, stream).permutation(n_rows);
    let mut held_out = perm[..n_held].to_vec();
    let mut kept = perm[n_held..].to_vec();
    held_out.sort_unstable();
    kept.sort_unstable();
    Ok(Split { kept, held_out })
}

/// Per-member training/validation partition.
pub fn split_train_val(
    n_rows: usize,
    seed: u64,
    val_fraction: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = split_indices(n_rows, seed, val_fraction, Stream::Split)?;
    Ok((s.kept, s.held_out))
}

/// Hold-out test partition of a whole dataset, returned as `(train, test)`.
pub fn train_test_split<T: Scalar>(
    data: &Dataset<T>,
    seed: u64,
    test_fraction: f64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let s = split_indices(data.n_rows(), seed, test_fraction, Stream::Holdout)?;
    Ok((data.subset(&s.kept), data.subset(&s.held_out)))
}
