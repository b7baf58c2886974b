//! Truncated-Gaussian density sweep over an ensemble's predictions.
//!
//! For a prediction set with population standard deviation `σ`, the density
//! is sampled on the grid `min - σ, min - σ + Δ, …` (while `≤ max + σ`) with
//! `Δ = (max - min) / grid_divisor`. Each grid point sums an unnormalized
//! Gaussian kernel of width `σ / bandwidth_divisor` over the predictions lying
//! in the closed window `[μ - σ·f, μ + σ·f]` and divides by the set size, so a
//! density is always in `[0, 1]` and equals 1 only when every prediction sits
//! on the grid point. The location of the maximum is the representative
//! prediction; the maximum itself is the bagging score.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raw outputs of an ensemble for one input point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    values: Vec<T>,
    source_seeds: Option<Vec<u64>>,
}

impl<T: Scalar> PredictionSet<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_values(&values)?;
        Ok(Self {
            values,
            source_seeds: None,
        })
    }

    /// Attaches the seed of the member that produced each value.
    pub fn with_seeds(values: Vec<T>, seeds: Vec<u64>) -> Result<Self> {
        check_values(&values)?;
        if seeds.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} seeds for {} predictions",
                seeds.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            source_seeds: Some(seeds),
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn source_seeds(&self) -> Option<&[u64]> {
        self.source_seeds.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Grid and kernel constants of the density sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig<T> {
    /// Number of grid steps spanning `max - min`.
    pub grid_divisor: usize,
    /// Kernel width is `σ / bandwidth_divisor`.
    pub bandwidth_divisor: T,
    /// Window half-width is `σ · window_half_width_factor`.
    pub window_half_width_factor: T,
}

impl<T: Scalar> Default for KdeConfig<T> {
    /// Step of 1/1000 of the prediction range, `h = σ/6`, window `±σ/2`: the
    /// kernel's three-sigma band coincides with the truncation window.
    fn default() -> Self {
        Self {
            grid_divisor: 1000,
            bandwidth_divisor: T::lit(6.0),
            window_half_width_factor: T::lit(0.5),
        }
    }
}

impl<T: Scalar> KdeConfig<T> {
    pub fn new(
        grid_divisor: usize,
        bandwidth_divisor: T,
        window_half_width_factor: T,
    ) -> Result<Self> {
        let cfg = Self {
            grid_divisor,
            bandwidth_divisor,
            window_half_width_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_divisor == 0 {
            return Err(Error::invalid("grid divisor must be positive"));
        }
        if !(self.bandwidth_divisor > T::zero() && self.bandwidth_divisor.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth divisor must be positive, got {}",
                self.bandwidth_divisor
            )));
        }
        if !(self.window_half_width_factor > T::zero() && self.window_half_width_factor.is_finite())
        {
            return Err(Error::invalid(format!(
                "window half-width factor must be positive, got {}",
                self.window_half_width_factor
            )));
        }
        Ok(())
    }
}

/// Sampled density over `[min - σ, max + σ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    pub positions: Vec<T>,
    pub densities: Vec<T>,
    /// Population standard deviation of the predictions.
    pub sigma: T,
    pub step: T,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the maximum density; the lowest position wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &d) in self.densities.iter().enumerate().skip(1) {
            if d > self.densities[best] {
                best = i;
            }
        }
        best
    }

    /// Writes `position,density` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "position,density")?;
        for (p, d) in self.positions.iter().zip(&self.densities) {
            writeln!(out, "{:.16e},{:.16e}", p, d)?;
        }
        out.flush()
    }
}

/// Representative prediction and its bagging score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaggingResult<T> {
    pub representative: T,
    /// Peak density, in `(0, 1]`.
    pub score: T,
}

impl<T: Scalar> BaggingResult<T> {
    pub fn from_grid(grid: &DensityGrid<T>) -> Self {
        let i = grid.argmax();
        Self {
            representative: grid.positions[i],
            score: grid.densities[i],
        }
    }
}

pub(crate) fn check_values<T: Scalar>(values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("prediction set is empty"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("prediction {i} is not finite")));
    }
    Ok(())
}

/// Standard deviation with divisor `n`.
pub fn population_std<T: Scalar>(values: &[T]) -> Result<T> {
    check_values(values)?;
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let ss: T = values.iter().map(|&y| (y - mean) * (y - mean)).sum();
    Ok((ss / n).sqrt())
}

/// Unnormalized Gaussian `exp(-(x - x_mu)² / (2 h²))`; equals 1 at `x = x_mu`.
pub fn kernel<T: Scalar>(x: T, x_mu: T, h_k: T) -> Result<T> {
    if !(h_k > T::zero() && h_k.is_finite()) {
        return Err(Error::InvalidBandwidth(h_k.as_f64()));
    }
    Ok(gaussian(x - x_mu, h_k * h_k * T::lit(2.0)))
}

#[inline]
fn gaussian<T: Scalar>(offset: T, two_h_sq: T) -> T {
    (-(offset * offset) / two_h_sq).exp()
}

/// Samples the truncated-kernel density of `values`.
///
/// Requires at least two distinct values; constant sets have no spread to
/// build a grid from and are reported as [`Error::DegenerateSpread`].
pub fn estimate_density<T: Scalar>(values: &[T], config: &KdeConfig<T>) -> Result<DensityGrid<T>> {
    config.validate()?;
    check_values(values)?;
    // Sorting first also fixes the summation order of the statistics, so the
    // result does not depend on member order down to the last bit.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let sigma = population_std(&sorted)?;
    let step = (max - min) / T::from_count(config.grid_divisor);
    if !(max > min && sigma > T::zero() && step > T::zero()) {
        return Err(Error::DegenerateSpread(values.len()));
    }

    let start = min - sigma;
    let end = max + sigma;
    let h = sigma / config.bandwidth_divisor;
    let two_h_sq = h * h * T::lit(2.0);
    let half_window = sigma * config.window_half_width_factor;
    let n = T::from_count(values.len());

    let mut positions = Vec::with_capacity(config.grid_divisor * 2 + 2);
    let mut densities = Vec::with_capacity(config.grid_divisor * 2 + 2);
    let mut k = 0usize;
    loop {
        // Multiplying instead of accumulating keeps the grid free of drift.
        let mu = start + T::from_count(k) * step;
        if mu > end {
            break;
        }
        let lower = mu - half_window;
        let upper = mu + half_window;
        let lo = sorted.partition_point(|&y| y < lower);
        let hi = sorted.partition_point(|&y| y <= upper);
        let sum: T = sorted[lo..hi]
            .iter()
            .map(|&y| gaussian(y - mu, two_h_sq))
            .sum();
        positions.push(mu);
        densities.push(sum / n);
        k += 1;
    }

    Ok(DensityGrid {
        positions,
        densities,
        sigma,
        step,
    })
}

/// Location and height of the density peak.
///
/// A set whose values are all identical (including a single value) yields
/// that value with score exactly 1.
pub fn bagging_score<T: Scalar>(values: &[T], config: &KdeConfig<T>) -> Result<BaggingResult<T>> {
    Ok(bagging_score_with_grid(values, config)?.0)
}

/// Like [`bagging_score`], also returning the sampled density when one was built.
pub fn bagging_score_with_grid<T: Scalar>(
    values: &[T],
    config: &KdeConfig<T>,
) -> Result<(BaggingResult<T>, Option<DensityGrid<T>>)> {
    config.validate()?;
    check_values(values)?;
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok((
            BaggingResult {
                representative: first,
                score: T::one(),
            },
            None,
        ));
    }
    match estimate_density(values, config) {
        Ok(grid) => Ok((BaggingResult::from_grid(&grid), Some(grid))),
        // Distinct values whose spread underflows behave like identical ones.
        Err(Error::DegenerateSpread(_)) => Ok((
            BaggingResult {
                representative: first,
                score: T::one(),
            },
            None,
        )),
        Err(e) => Err(e),
    }
}

impl<T: Scalar> PredictionSet<T> {
    pub fn population_std(&self) -> T {
        population_std(&self.values).expect("validated at construction")
    }

    pub fn estimate_density(&self, config: &KdeConfig<T>) -> Result<DensityGrid<T>> {
        estimate_density(&self.values, config)
    }

    pub fn bagging_score(&self, config: &KdeConfig<T>) -> Result<BaggingResult<T>> {
        bagging_score(&self.values, config)
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    /// Evaluates every grid point against every prediction in input order,
    /// with no window search. Only the spread is summed in ascending order.
    pub fn brute_force_density(values: &[f64], grid_divisor: usize) -> (Vec<f64>, Vec<f64>) {
        let n = values.len() as f64;
        let mut ordered = values.to_vec();
        ordered.sort_by(f64::total_cmp);
        let mean = ordered.iter().sum::<f64>() / n;
        let sigma = (ordered.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let step = (max - min) / grid_divisor as f64;
        let h = sigma / 6.0;
        let mut pos = Vec::new();
        let mut dens = Vec::new();
        let mut k = 0;
        while min - sigma + k as f64 * step <= max + sigma {
            let mu = min - sigma + k as f64 * step;
            let mut acc = 0.0;
            for &y in values {
                if y >= mu - sigma * 0.5 && y <= mu + sigma * 0.5 {
                    acc += (-(y - mu).powi(2) / (2.0 * h * h)).exp();
                }
            }
            pos.push(mu);
            dens.push(acc / n);
            k += 1;
        }
        (pos, dens)
    }
}
