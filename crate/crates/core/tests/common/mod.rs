//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use bagscore::ensemble::{Activation, MlpSpec, NetworkParams};
use bagscore::rng::{SeededRng, Stream};

/// Evaluates every grid point against every prediction in input order, with
/// no sorting or window search: the literal double loop.
pub struct OracleGrid {
    pub positions: Vec<f64>,
    pub densities: Vec<f64>,
    pub step: f64,
}

///
/// The spread statistics are summed in ascending order, which is the order
/// the library uses.
pub fn brute_force_density(values: &[f64]) -> OracleGrid {
    let mut ordered = values.to_vec();
    ordered.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = ordered.iter().sum::<f64>() / n;
    let sigma = (ordered.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n).sqrt();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let step = (max - min) / 1000.0;
    let h = sigma / 6.0;
    let mut positions = Vec::new();
    let mut densities = Vec::new();
    let mut k = 0usize;
    loop {
        let mu = (min - sigma) + k as f64 * step;
        if mu > max + sigma {
            break;
        }
        let mut acc = 0.0;
        for &y in values {
            if y >= mu - sigma * 0.5 && y <= mu + sigma * 0.5 {
                acc += (-((y - mu) * (y - mu)) / (2.0 * h * h)).exp();
            }
        }
        positions.push(mu);
        densities.push(acc / n);
        k += 1;
    }
    OracleGrid {
        positions,
        densities,
        step,
    }
}

impl OracleGrid {
    /// First index of the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.densities.len() {
            if self.densities[i] > self.densities[best] {
                best = i;
            }
        }
        best
    }
}

/// A random mixture of 1-4 Gaussian clusters with 2-200 members overall.
pub fn random_cluster_set(rng: &mut SeededRng) -> Vec<f64> {
    let n = 2 + rng.below(199);
    let n_clusters = 1 + rng.below(4);
    let centers: Vec<f64> = (0..n_clusters)
        .map(|_| rng.uniform_in(-100.0, 100.0))
        .collect();
    let widths: Vec<f64> = (0..n_clusters)
        .map(|_| 10f64.powf(rng.uniform_in(-2.0, 1.0)))
        .collect();
    let mut values: Vec<f64> = (0..n)
        .map(|_| {
            let c = rng.below(n_clusters);
            centers[c] + widths[c] * rng.normal()
        })
        .collect();
    if values.iter().all(|&v| v == values[0]) {
        values[0] += 1.0;
    }
    values
}

pub fn test_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed, Stream::Synthetic)
}

/// Random small topology with tanh/linear layers.
pub fn random_tiny_spec(rng: &mut SeededRng) -> MlpSpec {
    let input_dim = 1 + rng.below(4);
    let depth = 1 + rng.below(3);
    let widths = (0..depth).map(|_| 1 + rng.below(5)).collect();
    let acts = (0..depth)
        .map(|_| {
            if rng.below(2) == 0 {
                Activation::Tanh
            } else {
                Activation::Linear
            }
        })
        .collect();
    MlpSpec::new(input_dim, widths, acts).unwrap()
}

pub fn random_params(spec: &MlpSpec, rng: &mut SeededRng) -> NetworkParams<f64> {
    let mut p = NetworkParams::zeros(spec, 0);
    for l in &mut p.layers {
        for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
            *w = rng.uniform_in(-1.0, 1.0);
        }
    }
    p
}

pub fn param_mut(p: &mut NetworkParams<f64>, mut k: usize) -> &mut f64 {
    for l in &mut p.layers {
        if k < l.weights.len() {
            return &mut l.weights[k];
        }
        k -= l.weights.len();
        if k < l.biases.len() {
            return &mut l.biases[k];
        }
        k -= l.biases.len();
    }
    panic!("parameter index out of range")
}

/// Largest relative error between the analytic MSE gradient and central
/// finite differences with step `eps`. Relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn max_gradient_error(
    spec: &MlpSpec,
    params: &NetworkParams<f64>,
    xs: &[f64],
    ys: &[f64],
    eps: f64,
    floor: f64,
) -> f64 {
    let (_, grads) = bagscore::ensemble::mse_with_gradient(params, spec, xs, ys).unwrap();
    let analytic = grads.flatten();
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let mut plus = params.clone();
        *param_mut(&mut plus, k) += eps;
        let mut minus = params.clone();
        *param_mut(&mut minus, k) -= eps;
        let numeric = (bagscore::ensemble::mse(&plus, spec, xs, ys)
            - bagscore::ensemble::mse(&minus, spec, xs, ys))
            / (2.0 * eps);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

/// Skewed set: 70% of the mass within ±5% of the range around `m`, the rest
/// spread over a one-sided tail.
pub fn skewed_set(rng: &mut SeededRng, m: f64, scale: f64, n: usize) -> Vec<f64> {
    let n_cluster = (0.7 * n as f64).round() as usize;
    let mut v: Vec<f64> = (0..n_cluster)
        .map(|_| m + scale * (0.02 * rng.normal()).clamp(-0.05, 0.05))
        .collect();
    v.extend((n_cluster..n).map(|_| m + scale * rng.uniform_in(0.3, 1.0)));
    v
}
