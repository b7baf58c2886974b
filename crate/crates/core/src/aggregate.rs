//! Reductions of a prediction set to one ensemble output.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kde::{bagging_score, check_values, KdeConfig};
use crate::scalar::Scalar;

pub fn aggregate_mean<T: Scalar>(values: &[T]) -> Result<T> {
    check_values(values)?;
    Ok(values.iter().copied().sum::<T>() / T::from_count(values.len()))
}

/// Middle order statistic; even-sized sets average the two middle values.
pub fn aggregate_median<T: Scalar>(values: &[T]) -> Result<T> {
    check_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Ok(sorted[mid])
    } else {
        Ok((sorted[mid - 1] + sorted[mid]) / T::lit(2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aggregator {
    Mean,
    Median,
    /// Peak of the estimated density.
    BaggingScore,
}

impl Aggregator {
    pub const ALL: [Aggregator; 3] = [
        Aggregator::Mean,
        Aggregator::Median,
        Aggregator::BaggingScore,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Aggregator::Mean => "MEAN",
            Aggregator::Median => "MEDIAN",
            Aggregator::BaggingScore => "BS",
        }
    }

    pub fn apply<T: Scalar>(self, values: &[T], config: &KdeConfig<T>) -> Result<T> {
        match self {
            Aggregator::Mean => aggregate_mean(values),
            Aggregator::Median => aggregate_median(values),
            Aggregator::BaggingScore => Ok(bagging_score(values, config)?.representative),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MEAN" => Ok(Aggregator::Mean),
            "MEDIAN" => Ok(Aggregator::Median),
            "BS" => Ok(Aggregator::BaggingScore),
            other => Err(Error::invalid(format!("unknown aggregator {other:?}"))),
        }
    }
}
