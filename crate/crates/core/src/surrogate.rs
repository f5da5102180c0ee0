//! Fully connected ReLU networks used as learned value functions.
//!
//! Every layer, including the output, applies a ReLU, so predictions are
//! nonnegative and the network stays MIP-encodable. Training minimises the
//! mean squared error with Adam on full batches.

use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Bundle, ReportSet, ValuationOracle};
use crate::error::{Error, Result};

/// Pre-activations closer to zero than this count as sitting on a kink.
pub const KINK_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward(&self, input: &[f64], pre: &mut Vec<f64>) {
        pre.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            pre.push(self.bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layers: Vec<Layer>,
}

impl MlpNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<MlpNetwork> {
        if layers.is_empty() {
            return Err(Error::InvalidInstance("network without layers".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(Error::InvalidInstance(format!("layer {l} has inconsistent shapes")));
            }
            if l > 0 && layers[l - 1].outputs != layer.inputs {
                return Err(Error::InvalidInstance(format!("layer {l} does not chain onto layer {}", l - 1)));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance(format!("layer {l} has non-finite parameters")));
            }
        }
        if layers.last().map(|l| l.outputs) != Some(1) {
            return Err(Error::InvalidInstance("network must have a single output".into()));
        }
        Ok(MlpNetwork { layers })
    }

    /// All-zero network with the given layer sizes `[m, d₁, …, 1]`.
    pub fn zeros(sizes: &[usize]) -> Result<MlpNetwork> {
        check_sizes(sizes)?;
        MlpNetwork::new(sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect())
    }

    /// He-uniform weights from `seed`; biases are drawn from `U(-0.1, 0.1)`.
    pub fn random(sizes: &[usize], seed: u64) -> Result<MlpNetwork> {
        check_sizes(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = MlpNetwork::zeros(sizes)?;
        for layer in net.layers.iter_mut() {
            let limit = (6.0 / layer.inputs.max(1) as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
            layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn num_items(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn encode(&self, x: Bundle) -> Vec<f64> {
        (0..self.num_items()).map(|j| if x.contains(j) { 1.0 } else { 0.0 }).collect()
    }

    /// Forward pass; nonnegative by the output ReLU.
    pub fn predict(&self, x: Bundle) -> f64 {
        let mut act = self.encode(x);
        let mut pre = Vec::new();
        for layer in &self.layers {
            layer.forward(&act, &mut pre);
            act.clear();
            act.extend(pre.iter().map(|v| v.max(0.0)));
        }
        act[0]
    }

    /// Predictions for all `2^m` bundles in index order.
    pub fn predict_all(&self) -> Vec<f64> {
        (0..1u32 << self.num_items()).map(|b| self.predict(Bundle(b))).collect()
    }

    /// Flat text format: a header with the layer sizes, then for each layer
    /// its weight rows followed by its bias row.
    pub fn to_text(&self) -> String {
        let mut out = String::from("mlp\nsizes");
        for s in self.sizes() {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        let fmt_row = |out: &mut String, row: &[f64]| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "layer {l}");
            for o in 0..layer.outputs {
                fmt_row(&mut out, &layer.weights[o * layer.inputs..(o + 1) * layer.inputs]);
            }
            fmt_row(&mut out, &layer.bias);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<MlpNetwork> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let bad = |msg: &str| Error::Parse(format!("network file: {msg}"));
        if lines.next() != Some("mlp") {
            return Err(bad("missing header"));
        }
        let sizes: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("sizes"))
            .ok_or_else(|| bad("missing sizes line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad layer size")))
            .collect::<Result<_>>()?;
        check_sizes(&sizes)?;
        let parse_row = |line: Option<&str>, len: usize| -> Result<Vec<f64>> {
            let row: Vec<f64> = line
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<_>>()?;
            if row.len() != len {
                return Err(bad("row length mismatch"));
            }
            Ok(row)
        };
        let mut layers = Vec::new();
        for (l, w) in sizes.windows(2).enumerate() {
            if lines.next() != Some(format!("layer {l}").as_str()) {
                return Err(bad("missing layer marker"));
            }
            let mut weights = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[1] {
                weights.extend(parse_row(lines.next(), w[0])?);
            }
            let bias = parse_row(lines.next(), w[1])?;
            layers.push(Layer { inputs: w[0], outputs: w[1], weights, bias });
        }
        MlpNetwork::new(layers)
    }

    /// Per-layer interval bounds `[lo, hi]` of the pre-activations over
    /// inputs in `[0, 1]^m`.
    pub fn interval_bounds(&self) -> Vec<Vec<(f64, f64)>> {
        let mut act: Vec<(f64, f64)> = vec![(0.0, 1.0); self.num_items()];
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut pre = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let (mut lo, mut hi) = (layer.bias[o], layer.bias[o]);
                for (w, (a, b)) in layer.weights[o * layer.inputs..(o + 1) * layer.inputs].iter().zip(&act) {
                    if *w >= 0.0 {
                        lo += w * a;
                        hi += w * b;
                    } else {
                        lo += w * b;
                        hi += w * a;
                    }
                }
                pre.push((lo, hi));
            }
            act = pre.iter().map(|(lo, hi)| (lo.max(0.0), hi.max(0.0))).collect();
            out.push(pre);
        }
        out
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) || *sizes.last().unwrap() != 1 {
        return Err(Error::InvalidInstance(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

impl ValuationOracle for MlpNetwork {
    fn num_items(&self) -> usize {
        MlpNetwork::num_items(self)
    }

    fn value(&self, bundle: Bundle) -> f64 {
        self.predict(bundle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Data sets up to this size are trained full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig { epochs: 512, batch_size: 256, learning_rate: 1e-3, l2: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedMlp {
    pub network: MlpNetwork,
    /// Mean squared training error in the original value units.
    pub train_mse: f64,
}

/// Activations of one forward pass, kept for backpropagation.
struct Trace {
    acts: Vec<Vec<f64>>,
    pres: Vec<Vec<f64>>,
}

fn forward_trace(net: &MlpNetwork, input: Vec<f64>) -> Trace {
    let mut acts = vec![input];
    let mut pres = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        let mut pre = Vec::new();
        layer.forward(acts.last().unwrap(), &mut pre);
        acts.push(pre.iter().map(|v| v.max(0.0)).collect());
        pres.push(pre);
    }
    Trace { acts, pres }
}

/// Accumulates `scale · ∂(pred − target)²/∂θ` into `grads` (same layout as
/// the network, weights then bias per layer). Returns the squared error.
fn backprop(net: &MlpNetwork, input: Vec<f64>, target: f64, scale: f64, grads: &mut [Layer]) -> f64 {
    let t = forward_trace(net, input);
    let pred = t.acts.last().unwrap()[0];
    let err = pred - target;
    let mut delta: Vec<f64> = vec![2.0 * err * scale];
    for l in (0..net.layers.len()).rev() {
        let layer = &net.layers[l];
        // through the ReLU
        for (d, p) in delta.iter_mut().zip(&t.pres[l]) {
            if *p <= 0.0 {
                *d = 0.0;
            }
        }
        let input = &t.acts[l];
        let g = &mut grads[l];
        for o in 0..layer.outputs {
            if delta[o] == 0.0 {
                continue;
            }
            g.bias[o] += delta[o];
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, x) in row.iter_mut().zip(input) {
                *gw += delta[o] * x;
            }
        }
        if l > 0 {
            let mut next = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                if delta[o] == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += delta[o] * w;
                }
            }
            delta = next;
        }
    }
    err * err
}

/// Trains a network with layer sizes `sizes = [m, d₁, …, 1]` on `reports`.
///
/// Targets are divided by their maximum for training and the scale is
/// folded back into the output layer afterwards. Deterministic given
/// `cfg.seed`.
pub fn fit_mlp(reports: &ReportSet, sizes: &[usize], cfg: &TrainConfig) -> Result<TrainedMlp> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    check_sizes(sizes)?;
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || cfg.l2 < 0.0 {
        return Err(Error::Config("training epochs, batch size and learning rate must be positive".into()));
    }
    let m = sizes[0];
    let data: Vec<(Bundle, f64)> = reports.iter().collect();
    let scale = data.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let targets: Vec<f64> = data.iter().map(|(_, v)| v / scale).collect();
    let inputs: Vec<Vec<f64>> = data.iter().map(|(b, _)| (0..m).map(|j| if b.contains(j) { 1.0 } else { 0.0 }).collect()).collect();

    let mut net = MlpNetwork::random(sizes, cfg.seed)?;
    for layer in net.layers.iter_mut() {
        layer.bias.iter_mut().for_each(|b| *b = 0.01);
    }
    let mean_target = targets.iter().sum::<f64>() / targets.len() as f64;
    net.layers.last_mut().unwrap().bias[0] = mean_target.max(0.01);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5851_f42d_4c95_7f2d);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut m1: Vec<Layer> = net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let mut m2 = m1.clone();
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut step = 0i32;
    let batch = cfg.batch_size.min(data.len());
    for _ in 0..cfg.epochs {
        if batch < data.len() {
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
        }
        for chunk in order.chunks(batch) {
            let mut grads: Vec<Layer> = net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
            let w = 1.0 / chunk.len() as f64;
            let mut loss = 0.0;
            for &k in chunk {
                loss += backprop(&net, inputs[k].clone(), targets[k], w, &mut grads) * w;
            }
            if !loss.is_finite() {
                return Err(Error::Training("non-finite loss".into()));
            }
            step += 1;
            let c1 = 1.0 - f64::powi(b1, step);
            let c2 = 1.0 - f64::powi(b2, step);
            for l in 0..net.layers.len() {
                let layer = &mut net.layers[l];
                for (p, g, a, v) in izip4(&mut layer.weights, &grads[l].weights, &mut m1[l].weights, &mut m2[l].weights) {
                    let g = g + cfg.l2 * *p;
                    adam(p, g, a, v, cfg.learning_rate, b1, b2, c1, c2, eps);
                }
                for (p, g, a, v) in izip4(&mut layer.bias, &grads[l].bias, &mut m1[l].bias, &mut m2[l].bias) {
                    adam(p, *g, a, v, cfg.learning_rate, b1, b2, c1, c2, eps);
                }
            }
        }
    }
    let last = net.layers.last_mut().unwrap();
    last.weights.iter_mut().for_each(|w| *w *= scale);
    last.bias.iter_mut().for_each(|b| *b *= scale);
    let net = MlpNetwork::new(net.layers).map_err(|e| Error::Training(e.to_string()))?;
    let train_mse = data.iter().map(|(b, v)| (net.predict(*b) - v).powi(2)).sum::<f64>() / data.len() as f64;
    Ok(TrainedMlp { network: net, train_mse })
}

fn izip4<'a>(
    p: &'a mut [f64],
    g: &'a [f64],
    a: &'a mut [f64],
    v: &'a mut [f64],
) -> impl Iterator<Item = (&'a mut f64, &'a f64, &'a mut f64, &'a mut f64)> {
    p.iter_mut().zip(g).zip(a.iter_mut().zip(v.iter_mut())).map(|((p, g), (a, v))| (p, g, a, v))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn adam(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, b1: f64, b2: f64, c1: f64, c2: f64, eps: f64) {
    *m = b1 * *m + (1.0 - b1) * g;
    *v = b2 * *v + (1.0 - b2) * g * g;
    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
}

/// Outcome of [`gradient_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)`.
    pub max_relative_deviation: f64,
    /// `(layer, unit)` pairs whose pre-activation sits on, or is pushed
    /// across, the ReLU kink for some sample; those samples are left out of
    /// the comparison.
    pub kink_units: Vec<(usize, usize)>,
    pub samples_used: usize,
}

/// Mean squared error of `net` on `data`.
pub fn mse(net: &MlpNetwork, data: &[(Bundle, f64)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter().map(|(b, v)| (net.predict(*b) - v).powi(2)).sum::<f64>() / data.len() as f64
}

/// Analytic gradient of `data`'s mean squared error, flattened in the
/// order weights then bias, layer by layer.
pub fn loss_gradient(net: &MlpNetwork, data: &[(Bundle, f64)]) -> Vec<f64> {
    let mut grads: Vec<Layer> = net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let w = 1.0 / data.len().max(1) as f64;
    for (b, v) in data {
        backprop(net, net.encode(*b), *v, w, &mut grads);
    }
    grads.into_iter().flat_map(|l| l.weights.into_iter().chain(l.bias)).collect()
}

fn param_mut(net: &mut MlpNetwork, mut k: usize) -> &mut f64 {
    for layer in net.layers.iter_mut() {
        if k < layer.weights.len() {
            return &mut layer.weights[k];
        }
        k -= layer.weights.len();
        if k < layer.bias.len() {
            return &mut layer.bias[k];
        }
        k -= layer.bias.len();
    }
    panic!("parameter index out of range")
}

/// Compares the analytic gradient of the MSE loss with central finite
/// differences (step `1e-5`), taken per sample. A sample is left out when a
/// hidden pre-activation sits on the ReLU kink or when some `±h` step flips
/// a hidden unit's activation.
pub fn gradient_check(net: &MlpNetwork, data: &[(Bundle, f64)]) -> GradientCheck {
    let h = 1e-5;
    let hidden = net.layers.len() - 1;
    let pattern = |n: &MlpNetwork, b: Bundle| -> Vec<Vec<bool>> {
        forward_trace(n, n.encode(b)).pres[..hidden].iter().map(|p| p.iter().map(|v| *v > 0.0).collect()).collect()
    };
    let mut kink_units = Vec::new();
    let mut mark = |l: usize, o: usize| {
        if !kink_units.contains(&(l, o)) {
            kink_units.push((l, o));
        }
    };
    let base: Vec<Vec<Vec<bool>>> = data.iter().map(|(b, _)| pattern(net, *b)).collect();
    let mut kinked = vec![false; data.len()];
    for (s, &(b, _)) in data.iter().enumerate() {
        let t = forward_trace(net, net.encode(b));
        for (l, pre) in t.pres[..hidden].iter().enumerate() {
            for (o, p) in pre.iter().enumerate() {
                if p.abs() < KINK_TOL {
                    kinked[s] = true;
                    mark(l, o);
                }
            }
        }
    }
    let mut probe = net.clone();
    for k in 0..net.num_params() {
        let orig = *param_mut(&mut probe, k);
        for step in [h, -h] {
            *param_mut(&mut probe, k) = orig + step;
            for (s, &(b, _)) in data.iter().enumerate() {
                let moved = pattern(&probe, b);
                for (l, (row, was)) in moved.iter().zip(&base[s]).enumerate() {
                    for (o, (x, y)) in row.iter().zip(was).enumerate() {
                        if x != y {
                            kinked[s] = true;
                            mark(l, o);
                        }
                    }
                }
            }
        }
        *param_mut(&mut probe, k) = orig;
    }
    let smooth: Vec<(Bundle, f64)> = data.iter().zip(&kinked).filter(|(_, k)| !**k).map(|(d, _)| *d).collect();
    let analytic = loss_gradient(net, &smooth);
    let mut worst: f64 = 0.0;
    for (k, a) in analytic.iter().enumerate() {
        let orig = *param_mut(&mut probe, k);
        *param_mut(&mut probe, k) = orig + h;
        let up: Vec<f64> = smooth.iter().map(|(b, _)| probe.predict(*b)).collect();
        *param_mut(&mut probe, k) = orig - h;
        let down: Vec<f64> = smooth.iter().map(|(b, _)| probe.predict(*b)).collect();
        *param_mut(&mut probe, k) = orig;
        // (u - v)^2 - (d - v)^2 = (u - d)(u + d - 2v), factored to avoid cancellation
        let diff: f64 = smooth.iter().zip(up.iter().zip(&down)).map(|((_, v), (u, d))| (u - d) * (u + d - 2.0 * v)).sum();
        let numeric = diff / (2.0 * h * smooth.len().max(1) as f64);
        let dev = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(dev);
    }
    kink_units.sort_unstable();
    GradientCheck { max_relative_deviation: worst, kink_units, samples_used: smooth.len() }
}
