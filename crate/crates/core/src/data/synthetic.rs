use std::fmt;
use std::str::FromStr;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};

/// One-dimensional ground-truth functions for synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    /// `x · sin(x)`
    XSinX,
    /// `sin(x)`
    Sine,
    /// `x³ / 100 - x`
    Cubic,
}

impl GroundTruth {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            GroundTruth::XSinX => x * x.sin(),
            GroundTruth::Sine => x.sin(),
            GroundTruth::Cubic => x * x * x / 100.0 - x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroundTruth::XSinX => "x-sin-x",
            GroundTruth::Sine => "sine",
            GroundTruth::Cubic => "cubic",
        }
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroundTruth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x-sin-x" => Ok(GroundTruth::XSinX),
            "sine" => Ok(GroundTruth::Sine),
            "cubic" => Ok(GroundTruth::Cubic),
            other => Err(Error::invalid(format!("unknown ground truth {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub function: GroundTruth,
    pub domain: (f64, f64),
    pub n_train: usize,
    pub noise_std: f64,
    /// Sub-intervals of the domain that receive no training samples.
    pub gaps: Vec<(f64, f64)>,
}

impl Default for SyntheticSpec {
    /// `x·sin(x)` on `[-15, 15]`, 300 clean samples, no samples in `[-12, -4]`.
    fn default() -> Self {
        Self {
            function: GroundTruth::XSinX,
            domain: (-15.0, 15.0),
            n_train: 300,
            noise_std: 0.0,
            gaps: vec![(-12.0, -4.0)],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("invalid domain [{lo}, {hi}]")));
        }
        if self.n_train < 10 {
            return Err(Error::invalid(
                "synthetic experiments need at least 10 samples",
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid(
                "noise standard deviation must be non-negative",
            ));
        }
        for &(a, b) in &self.gaps {
            if !(a < b && a >= lo && b <= hi) {
                return Err(Error::invalid(format!(
                    "gap [{a}, {b}] is not inside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Disjoint, ordered pieces of the domain outside every gap.
    pub fn sampling_segments(&self) -> Vec<(f64, f64)> {
        let mut gaps = self.gaps.clone();
        gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut segments = Vec::new();
        let mut cursor = self.domain.0;
        for (a, b) in gaps {
            if a > cursor {
                segments.push((cursor, a));
            }
            cursor = cursor.max(b);
        }
        if cursor < self.domain.1 {
            segments.push((cursor, self.domain.1));
        }
        segments
    }

    pub fn in_gap(&self, x: f64) -> bool {
        self.gaps.iter().any(|&(a, b)| x >= a && x <= b)
    }
}

/// Samples `n_train` inputs uniformly on the domain minus the gaps and
/// labels them with the ground truth plus Gaussian noise.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset<f64>> {
    spec.validate()?;
    let segments = spec.sampling_segments();
    let total: f64 = segments.iter().map(|(a, b)| b - a).sum();
    if segments.is_empty() || total <= 0.0 {
        return Err(Error::invalid("gaps cover the whole domain"));
    }
    let mut xs_rng = SeededRng::new(seed, Stream::Synthetic);
    let mut noise_rng = SeededRng::new(seed, Stream::Noise);
    let mut xs = Vec::with_capacity(spec.n_train);
    let mut ys = Vec::with_capacity(spec.n_train);
    while xs.len() < spec.n_train {
        let mut u = xs_rng.uniform() * total;
        let mut x = segments[segments.len() - 1].1;
        for &(a, b) in &segments {
            let len = b - a;
            if u < len {
                x = a + u;
                break;
            }
            u -= len;
        }
        // Gaps are closed; a draw rounding onto an edge is redrawn.
        if spec.in_gap(x) {
            continue;
        }
        let noise = if spec.noise_std > 0.0 {
            spec.noise_std * noise_rng.normal()
        } else {
            0.0
        };
        xs.push(x);
        ys.push(spec.function.eval(x) + noise);
    }
    Dataset::new(xs, 1, ys, vec!["x".into()], "y".into())
}
