use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};
use crate::scalar::Scalar;

/// `tanh` evaluated as `2 / (1 + e^(-2x)) - 1`.
///
/// The exponential is only ever taken of a non-positive argument, so large
/// magnitudes saturate to ±1 instead of overflowing, and the result is exactly
/// odd.
pub fn tanh_activation<T: Scalar>(x: T) -> T {
    let two = T::lit(2.0);
    if x < T::zero() {
        return -tanh_activation(-x);
    }
    two / (T::one() + (-two * x).exp()) - T::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Linear,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Linear => x,
            Activation::Tanh => tanh_activation(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_at_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Tanh => T::one() - y * y,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Linear),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::invalid(format!("unknown activation {other:?}"))),
        }
    }
}

/// Fully connected topology with a scalar linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub const OUTPUT_DIM: usize = 1;

    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if hidden_widths.len() != activations.len() {
            return Err(Error::invalid(format!(
                "{} hidden layers but {} activations",
                hidden_widths.len(),
                activations.len()
            )));
        }
        if hidden_widths.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        Ok(Self {
            input_dim,
            hidden_widths,
            activations,
        })
    }

    /// Three hidden layers of 20 units; only the middle one is `tanh`.
    pub fn alternating(input_dim: usize) -> Self {
        Self::new(
            input_dim,
            vec![20, 20, 20],
            vec![Activation::Linear, Activation::Tanh, Activation::Linear],
        )
        .expect("valid default topology")
    }

    pub fn output_dim(&self) -> usize {
        Self::OUTPUT_DIM
    }

    /// `(fan_in, fan_out)` of every weight matrix, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_widths);
        dims.push(Self::OUTPUT_DIM);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Activation after weight layer `layer`; the output layer is linear.
    pub fn activation(&self, layer: usize) -> Activation {
        self.activations
            .get(layer)
            .copied()
            .unwrap_or(Activation::Linear)
    }

    pub fn n_params(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }

    fn widest(&self) -> usize {
        self.hidden_widths
            .iter()
            .copied()
            .chain([self.input_dim, Self::OUTPUT_DIM])
            .max()
            .unwrap_or(1)
    }
}

/// One affine map. `weights[i * fan_out + j]` connects input `i` to output `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![T::zero(); fan_in * fan_out],
            biases: vec![T::zero(); fan_out],
        }
    }

    fn affine(&self, input: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.biases);
        for (i, &x) in input.iter().enumerate() {
            let row = &self.weights[i * self.fan_out..(i + 1) * self.fan_out];
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + x * w;
            }
        }
    }
}

/// Weights of one trained (or freshly initialized) network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub layers: Vec<Layer<T>>,
    pub seed: u64,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn zeros(spec: &MlpSpec, seed: u64) -> Self {
        Self {
            layers: spec
                .layer_shapes()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
            seed,
        }
    }

    pub fn check_shapes(&self, spec: &MlpSpec) -> Result<()> {
        let shapes = spec.layer_shapes();
        let ok = shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(i, o), l)| {
                l.fan_in == i && l.fan_out == o && l.weights.len() == i * o && l.biases.len() == o
            });
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "network parameters do not match the topology",
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.biases);
        }
        out
    }

    pub(crate) fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub(crate) fn values(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_network<T: Scalar>(spec: &MlpSpec, seed: u64) -> NetworkParams<T> {
    let mut rng = SeededRng::new(seed, Stream::Init);
    let mut params = NetworkParams::zeros(spec, seed);
    for layer in &mut params.layers {
        let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for w in &mut layer.weights {
            *w = T::lit(rng.uniform_in(-limit, limit));
        }
    }
    params
}

fn check_input<T: Scalar>(spec: &MlpSpec, x: &[T]) -> Result<()> {
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
    Ok(())
}

/// Network output for one feature vector.
pub fn forward<T: Scalar>(params: &NetworkParams<T>, spec: &MlpSpec, x: &[T]) -> Result<T> {
    check_input(spec, x)?;
    params.check_shapes(spec)?;
    let mut scratch = Workspace::new(spec);
    Ok(scratch.forward(params, spec, x))
}

/// Reusable activation buffers for forward and backward passes.
pub(crate) struct Workspace<T> {
    /// Post-activation outputs of every layer, input first.
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new(spec: &MlpSpec) -> Self {
        let mut acts = vec![vec![T::zero(); spec.input_dim]];
        for (_, o) in spec.layer_shapes() {
            acts.push(vec![T::zero(); o]);
        }
        let w = spec.widest();
        Self {
            acts,
            delta: Vec::with_capacity(w),
            delta_prev: Vec::with_capacity(w),
        }
    }

    pub(crate) fn forward(&mut self, params: &NetworkParams<T>, spec: &MlpSpec, x: &[T]) -> T {
        self.acts[0].copy_from_slice(x);
        for (l, layer) in params.layers.iter().enumerate() {
            let (head, tail) = self.acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            layer.affine(&head[l], out);
            let act = spec.activation(l);
            if act != Activation::Linear {
                for v in out.iter_mut() {
                    *v = act.apply(*v);
                }
            }
        }
        self.acts.last().expect("output layer")[0]
    }

    /// Adds `d loss / d params` for one sample to `grads`, given
    /// `d loss / d output`. Must follow `forward` on the same sample.
    pub(crate) fn backward(
        &mut self,
        params: &NetworkParams<T>,
        spec: &MlpSpec,
        d_output: T,
        grads: &mut NetworkParams<T>,
    ) {
        self.delta.clear();
        self.delta.push(d_output);
        for l in (0..params.layers.len()).rev() {
            let layer = &params.layers[l];
            let grad = &mut grads.layers[l];
            let input = &self.acts[l];
            for (i, &a) in input.iter().enumerate() {
                let row = &mut grad.weights[i * layer.fan_out..(i + 1) * layer.fan_out];
                for (g, &d) in row.iter_mut().zip(&self.delta) {
                    *g = *g + a * d;
                }
            }
            for (g, &d) in grad.biases.iter_mut().zip(&self.delta) {
                *g = *g + d;
            }
            if l == 0 {
                break;
            }
            let below = spec.activation(l - 1);
            self.delta_prev.clear();
            for (i, &a) in input.iter().enumerate() {
                let row = &layer.weights[i * layer.fan_out..(i + 1) * layer.fan_out];
                let s: T = row
                    .iter()
                    .zip(&self.delta)
                    .fold(T::zero(), |acc, (&w, &d)| acc + w * d);
                self.delta_prev.push(s * below.derivative_at_output(a));
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
    }
}

/// Mean squared error over the rows of `features` (row-major, `input_dim`
/// columns) together with its gradient.
pub fn mse_with_gradient<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &MlpSpec,
    features: &[T],
    targets: &[T],
) -> Result<(T, NetworkParams<T>)> {
    params.check_shapes(spec)?;
    if targets.is_empty() || features.len() != targets.len() * spec.input_dim {
        return Err(Error::invalid("feature matrix does not match targets"));
    }
    let mut ws = Workspace::new(spec);
    let mut grads = NetworkParams::zeros(spec, params.seed);
    let n = T::from_count(targets.len());
    let two = T::lit(2.0);
    let mut loss = T::zero();
    for (x, &y) in features.chunks_exact(spec.input_dim).zip(targets) {
        let r = ws.forward(params, spec, x) - y;
        loss = loss + r * r;
        ws.backward(params, spec, two * r / n, &mut grads);
    }
    Ok((loss / n, grads))
}

/// Mean squared error without gradients.
pub fn mse<T: Scalar>(
    params: &NetworkParams<T>,
    spec: &MlpSpec,
    features: &[T],
    targets: &[T],
) -> T {
    let mut ws = Workspace::new(spec);
    let sum: T = features
        .chunks_exact(spec.input_dim)
        .zip(targets)
        .map(|(x, &y)| {
            let r = ws.forward(params, spec, x) - y;
            r * r
        })
        .sum();
    sum / T::from_count(targets.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tanh_examples() {
        assert_eq!(tanh_activation(0.0f64), 0.0);
        // tanh(1) = 0.761594155955764888119458282605
        assert_relative_eq!(
            tanh_activation(1.0f64),
            0.761_594_155_955_764_9,
            max_relative = 1e-15
        );
        for &x in &[1e-9, 0.3, 2.0, 17.0, 400.0, 1e6] {
            assert_eq!(tanh_activation(x), -tanh_activation(-x));
            assert_relative_eq!(tanh_activation(x), f64::tanh(x), epsilon = 1e-15);
        }
        assert_eq!(tanh_activation(1e6f64), 1.0);
        assert_eq!(tanh_activation(-1e6f64), -1.0);
        assert!(tanh_activation(-800.0f32).is_finite());
    }

    #[test]
    fn default_topology() {
        let spec = MlpSpec::alternating(8);
        assert_eq!(spec.hidden_widths, vec![20, 20, 20]);
        assert_eq!(
            spec.activations,
            vec![Activation::Linear, Activation::Tanh, Activation::Linear]
        );
        assert_eq!(
            spec.layer_shapes(),
            vec![(8, 20), (20, 20), (20, 20), (20, 1)]
        );
        assert_eq!(spec.n_params(), 8 * 20 + 20 + 2 * (20 * 20 + 20) + 21);
        assert!(MlpSpec::new(2, vec![3], vec![]).is_err());
        assert!(MlpSpec::new(0, vec![3], vec![Activation::Tanh]).is_err());
    }

    #[test]
    fn init_is_deterministic_and_seed_dependent() {
        let spec = MlpSpec::alternating(8);
        let a: NetworkParams<f64> = init_network(&spec, 42);
        let b: NetworkParams<f64> = init_network(&spec, 42);
        let c: NetworkParams<f64> = init_network(&spec, 43);
        assert_eq!(a, b);
        assert_ne!(a.flatten(), c.flatten());
        a.check_shapes(&spec).unwrap();
        for (l, (fi, fo)) in a.layers.iter().zip(spec.layer_shapes()) {
            let limit = (6.0 / (fi + fo) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
            assert!(l.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = MlpSpec::alternating(3);
        let params = NetworkParams::<f64>::zeros(&spec, 0);
        assert_eq!(forward(&params, &spec, &[1.0, -2.0, 3.5]).unwrap(), 0.0);
    }

    #[test]
    fn linear_network_is_homogeneous() {
        let spec =
            MlpSpec::new(3, vec![5, 4], vec![Activation::Linear, Activation::Linear]).unwrap();
        let params: NetworkParams<f64> = init_network(&spec, 9);
        let x = [0.3, -1.2, 2.0];
        let x2: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let y = forward(&params, &spec, &x).unwrap();
        let y2 = forward(&params, &spec, &x2).unwrap();
        assert_relative_eq!(y2, 2.0 * y, max_relative = 1e-14);
    }

    #[test]
    fn tiny_network_hand_computed() {
        // 1-2-1 with tanh hidden layer:
        // h = tanh([0.5x + 0.1, -x + 0.2]); y = 2 h1 - 3 h2 + 0.5
        let spec = MlpSpec::new(1, vec![2], vec![Activation::Tanh]).unwrap();
        let params = NetworkParams {
            layers: vec![
                Layer {
                    fan_in: 1,
                    fan_out: 2,
                    weights: vec![0.5, -1.0],
                    biases: vec![0.1, 0.2],
                },
                Layer {
                    fan_in: 2,
                    fan_out: 1,
                    weights: vec![2.0, -3.0],
                    biases: vec![0.5],
                },
            ],
            seed: 0,
        };
        // x = 1: 2 tanh(0.6) - 3 tanh(-0.8) + 0.5, evaluated at 30 digits
        // = 3.56620944479961750565889425587
        assert_relative_eq!(
            forward(&params, &spec, &[1.0]).unwrap(),
            3.566_209_444_799_617,
            max_relative = 1e-14
        );
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let spec = MlpSpec::alternating(4);
        let params: NetworkParams<f64> = init_network(&spec, 1);
        assert!(matches!(
            forward(&params, &spec, &[1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = MlpSpec::new(2, vec![3, 3], vec![Activation::Tanh, Activation::Linear]).unwrap();
        let mut params: NetworkParams<f64> = init_network(&spec, 5);
        for (k, b) in params
            .layers
            .iter_mut()
            .flat_map(|l| l.biases.iter_mut())
            .enumerate()
        {
            *b = 0.1 * k as f64 - 0.2;
        }
        let xs = [0.5, -1.0, 1.5, 0.2, -0.7, 0.9];
        let ys = [0.3, -0.4, 1.1];
        let (_, grads) = mse_with_gradient(&params, &spec, &xs, &ys).unwrap();
        let analytic = grads.flatten();
        let eps = 1e-5;
        for (k, &a) in analytic.iter().enumerate() {
            let mut plus = params.clone();
            *plus.values_mut().nth(k).unwrap() += eps;
            let mut minus = params.clone();
            *minus.values_mut().nth(k).unwrap() -= eps;
            let fd = (mse(&plus, &spec, &xs, &ys) - mse(&minus, &spec, &xs, &ys)) / (2.0 * eps);
            let denom = a.abs().max(fd.abs()).max(1e-8);
            assert!((a - fd).abs() / denom < 1e-4, "param {k}: {a} vs {fd}");
        }
    }
}
