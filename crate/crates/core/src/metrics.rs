//! Regression error measures and the per-aggregator comparison report.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::aggregate::{aggregate_mean, aggregate_median, Aggregator};
use crate::data::Dataset;
use crate::ensemble::Predictor;
use crate::error::{Error, Result};
use crate::kde::{bagging_score, KdeConfig};
use crate::scalar::Scalar;

fn check_pair<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::invalid("no values to score"));
    }
    Ok(())
}

/// Coefficient of determination `1 - SS_res / SS_tot`; negative for models
/// worse than the mean.
pub fn r2<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check_pair(y_true, y_pred)?;
    let n = T::from_count(y_true.len());
    let mean = y_true.iter().copied().sum::<T>() / n;
    let ss_tot: T = y_true.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if ss_tot == T::zero() {
        return Err(Error::UndefinedVariance);
    }
    let ss_res: T = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| (y - p) * (y - p))
        .sum();
    Ok(T::one() - ss_res / ss_tot)
}

pub fn rmse<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check_pair(y_true, y_pred)?;
    let ss: T = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| (y - p) * (y - p))
        .sum();
    Ok((ss / T::from_count(y_true.len())).sqrt())
}

/// Mean absolute percentage error, in percent.
pub fn mape<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check_pair(y_true, y_pred)?;
    if let Some(row) = y_true.iter().position(|&y| y == T::zero()) {
        return Err(Error::ZeroTarget { row });
    }
    let sum: T = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| ((y - p) / y).abs())
        .sum();
    Ok(T::lit(100.0) * sum / T::from_count(y_true.len()))
}

pub fn mae<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check_pair(y_true, y_pred)?;
    let sum: T = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| (y - p).abs())
        .sum();
    Ok(sum / T::from_count(y_true.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow<T> {
    pub aggregator: Aggregator,
    pub r2: T,
    pub rmse: T,
    pub mape: T,
    pub mae: T,
}

impl<T: Scalar> MetricRow<T> {
    pub fn compute(aggregator: Aggregator, y_true: &[T], y_pred: &[T]) -> Result<Self> {
        Ok(Self {
            aggregator,
            r2: r2(y_true, y_pred)?,
            rmse: rmse(y_true, y_pred)?,
            mape: mape(y_true, y_pred)?,
            mae: mae(y_true, y_pred)?,
        })
    }
}

/// Aggregated outputs for one test row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPrediction<T> {
    pub y_true: T,
    pub mean: T,
    pub median: T,
    pub representative: T,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    /// One row per aggregator, in [`Aggregator::ALL`] order.
    pub rows: Vec<MetricRow<T>>,
    pub predictions: Vec<RowPrediction<T>>,
}

impl<T: Scalar> EvalReport<T> {
    pub fn n_test(&self) -> usize {
        self.predictions.len()
    }

    pub fn get(&self, aggregator: Aggregator) -> &MetricRow<T> {
        self.rows
            .iter()
            .find(|r| r.aggregator == aggregator)
            .expect("every aggregator is reported")
    }

    /// Aligned table with six significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:>12} {:>12} {:>12} {:>12}",
            "method", "R2", "RMSE", "MAPE", "MAE"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<8} {:>12} {:>12} {:>12} {:>12}",
                r.aggregator.label(),
                sig6(r.r2.as_f64()),
                sig6(r.rmse.as_f64()),
                sig6(r.mape.as_f64()),
                sig6(r.mae.as_f64()),
            );
        }
        let _ = writeln!(s, "n_test = {}", self.n_test());
        s
    }

    /// `aggregator,r2,rmse,mape,mae` at full (round-trip) precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "aggregator,r2,rmse,mape,mae")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.aggregator.label(),
                r.r2.as_f64(),
                r.rmse.as_f64(),
                r.mape.as_f64(),
                r.mae.as_f64()
            )?;
        }
        out.flush()
    }

    /// Per-row `y_true,mean,median,bs,score`.
    pub fn write_predictions_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "y_true,mean,median,bs,score")?;
        for p in &self.predictions {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.y_true.as_f64(),
                p.mean.as_f64(),
                p.median.as_f64(),
                p.representative.as_f64(),
                p.score.as_f64()
            )?;
        }
        out.flush()
    }
}

/// Six significant digits, switching to exponent notation outside
/// `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        format!("{x:.5e}")
    } else {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    }
}

/// Predicts every test row once and scores MEAN, MEDIAN and the density
/// peak on the same prediction sets.
pub fn evaluate_aggregators<T: Scalar, P: Predictor<T>>(
    model: &P,
    test: &Dataset<T>,
    config: &KdeConfig<T>,
) -> Result<EvalReport<T>> {
    if test.n_rows() == 0 {
        return Err(Error::invalid("empty test set"));
    }
    config.validate()?;
    let predictions = (0..test.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = |e: Error| Error::Row {
                row: i,
                source: Box::new(e),
            };
            let set = model.predict(test.row(i)).map_err(row)?;
            let values = set.values();
            let bs = bagging_score(values, config).map_err(row)?;
            Ok(RowPrediction {
                y_true: test.targets()[i],
                mean: aggregate_mean(values).map_err(row)?,
                median: aggregate_median(values).map_err(row)?,
                representative: bs.representative,
                score: bs.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let y_true: Vec<T> = predictions.iter().map(|p| p.y_true).collect();
    let rows = Aggregator::ALL
        .iter()
        .map(|&agg| {
            let y_pred: Vec<T> = predictions
                .iter()
                .map(|p| match agg {
                    Aggregator::Mean => p.mean,
                    Aggregator::Median => p.median,
                    Aggregator::BaggingScore => p.representative,
                })
                .collect();
            MetricRow::compute(agg, &y_true, &y_pred)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { rows, predictions })
}
