//! Fully connected sine-activated network mapping `(x, y)` to RGB.
//!
//! Every hidden layer computes `sin(ω₀·(W·a + b))`; the output layer is a
//! plain affine map. Parameters live in one flat buffer in storage order:
//! for each layer, the row-major `[fan_out × fan_in]` weight matrix followed
//! by the bias vector. The quantizer, the container format and the optimizer
//! all rely on that order.
//!
//! Parameters are held as `f64` so that finite-difference checks can perturb
//! them freely, but initialization and the optimizer keep every value on the
//! `f32` grid. Arithmetic inside forward/backward is double precision.

use std::ops::Range;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CoinError, Result};

/// Coordinate input dimension.
pub const IN_DIM: usize = 2;
/// RGB output dimension.
pub const OUT_DIM: usize = 3;
/// Default sine frequency multiplier ω₀.
pub const DEFAULT_FREQ_SCALE: f32 = 30.0;

/// Pixels evaluated together in one layer-by-layer sweep.
const CHUNK: usize = 256;
/// Fixed number of gradient shards; the reduction order depends only on the
/// batch length, never on the thread count.
const SHARDS: usize = 16;

pub type Coord = [f64; 2];
pub type Rgb = [f64; 3];

/// Network topology: hidden-layer count, hidden width and ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    hidden_layers: u16,
    width: u16,
    freq_scale: f32,
}

impl Architecture {
    pub fn new(hidden_layers: usize, width: usize, freq_scale: f32) -> Result<Self> {
        if hidden_layers == 0 || hidden_layers > u16::MAX as usize {
            return Err(CoinError::InvalidArchitecture(format!(
                "hidden_layers must be in 1..={}, got {hidden_layers}",
                u16::MAX
            )));
        }
        if width == 0 || width > u16::MAX as usize {
            return Err(CoinError::InvalidArchitecture(format!(
                "width must be in 1..={}, got {width}",
                u16::MAX
            )));
        }
        if !(freq_scale.is_finite() && freq_scale > 0.0) {
            return Err(CoinError::InvalidArchitecture(format!(
                "freq_scale must be positive and finite, got {freq_scale}"
            )));
        }
        Ok(Self {
            hidden_layers: hidden_layers as u16,
            width: width as u16,
            freq_scale,
        })
    }

    /// Architecture with the default ω₀ of 30.
    pub fn with_default_freq(hidden_layers: usize, width: usize) -> Result<Self> {
        Self::new(hidden_layers, width, DEFAULT_FREQ_SCALE)
    }

    pub fn hidden_layers(&self) -> usize {
        self.hidden_layers as usize
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn freq_scale(&self) -> f32 {
        self.freq_scale
    }

    /// Total number of stored scalars (all weights and biases).
    pub fn param_count(&self) -> usize {
        let l = self.hidden_layers();
        let w = self.width();
        (IN_DIM * w + w) + (l - 1) * (w * w + w) + (w * OUT_DIM + OUT_DIM)
    }

    /// Shapes and buffer offsets of the `hidden_layers + 1` affine layers.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let w = self.width();
        let mut shapes = Vec::with_capacity(self.hidden_layers() + 1);
        let mut offset = 0;
        for k in 0..=self.hidden_layers() {
            let fan_in = if k == 0 { IN_DIM } else { w };
            let fan_out = if k == self.hidden_layers() { OUT_DIM } else { w };
            shapes.push(LayerShape {
                fan_in,
                fan_out,
                offset,
            });
            offset += fan_in * fan_out + fan_out;
        }
        shapes
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{} (omega_0 = {})",
            self.hidden_layers, self.width, self.freq_scale
        )
    }
}

/// Location of one affine layer inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn weights(&self) -> Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias(&self) -> Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    pub fn len(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sine-activated MLP `f: [-1, 1]² → ℝ³`.
#[derive(Debug, Clone, PartialEq)]
pub struct SirenNetwork {
    arch: Architecture,
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
}

/// ∂loss/∂parameter, laid out exactly like [`SirenNetwork::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    arch: Architecture,
    values: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            arch,
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl SirenNetwork {
    /// All-zero network; evaluates to `(0, 0, 0)` everywhere.
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            arch,
            shapes: arch.layer_shapes(),
            params: vec![0.0; arch.param_count()],
        }
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(CoinError::ShapeMismatch {
                what: "parameter buffer",
                expected: arch.param_count(),
                actual: params.len(),
            });
        }
        Ok(Self {
            arch,
            shapes: arch.layer_shapes(),
            params,
        })
    }

    /// SIREN initialization, deterministic in `seed`.
    ///
    /// The first layer draws from `U(-1/fan_in, 1/fan_in)`, every later layer
    /// from `U(-√(6/fan_in)/ω₀, √(6/fan_in)/ω₀)`. Biases share their layer's
    /// interval.
    pub fn init_siren(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(arch);
        let omega = arch.freq_scale();
        for (k, shape) in net.shapes.iter().enumerate() {
            let bound = init_bound(k, shape.fan_in, omega);
            let dist = Uniform::new_inclusive(-bound, bound);
            for p in &mut net.params[shape.offset..shape.offset + shape.len()] {
                *p = dist.sample(&mut rng) as f64;
            }
        }
        net
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn layer_shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.shapes[layer].weights()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.params[self.shapes[layer].bias()]
    }

    /// Evaluates the network on a batch of coordinates. Outputs are raw,
    /// unclamped affine values in input order.
    pub fn forward(&self, coords: &[Coord]) -> Vec<Rgb> {
        let mut out = vec![[0.0; OUT_DIM]; coords.len()];
        out.par_chunks_mut(CHUNK)
            .zip(coords.par_chunks(CHUNK))
            .for_each_init(
                || Tape::new(self),
                |tape, (out, coords)| {
                    tape.run(self, coords, false);
                    for (o, y) in out.iter_mut().zip(tape.output.chunks_exact(OUT_DIM)) {
                        o.copy_from_slice(y);
                    }
                },
            );
        out
    }

    /// Mean squared error over every output scalar, and its exact gradient.
    pub fn backward(&self, coords: &[Coord], targets: &[Rgb]) -> Result<(f64, GradientSet)> {
        if coords.len() != targets.len() {
            return Err(CoinError::ShapeMismatch {
                what: "target batch",
                expected: coords.len(),
                actual: targets.len(),
            });
        }
        if coords.is_empty() {
            return Err(CoinError::EmptyBatch);
        }

        let n_scalars = (coords.len() * OUT_DIM) as f64;
        let scale = 2.0 / n_scalars;
        let n_chunks = coords.len().div_ceil(CHUNK);
        let shard_len = n_chunks.div_ceil(SHARDS) * CHUNK;

        let shards: Vec<(f64, Vec<f64>)> = coords
            .par_chunks(shard_len)
            .zip(targets.par_chunks(shard_len))
            .map(|(coords, targets)| {
                let mut tape = Tape::new(self);
                let mut grad = vec![0.0; self.params.len()];
                let mut sse = 0.0;
                for (c, t) in coords.chunks(CHUNK).zip(targets.chunks(CHUNK)) {
                    tape.run(self, c, true);
                    sse += tape.backprop(self, t, scale, &mut grad);
                }
                (sse, grad)
            })
            .collect();

        let mut sse = 0.0;
        let mut values = vec![0.0; self.params.len()];
        for (s, g) in shards {
            sse += s;
            for (acc, v) in values.iter_mut().zip(g) {
                *acc += v;
            }
        }
        Ok((
            sse / n_scalars,
            GradientSet {
                arch: self.arch,
                values,
            },
        ))
    }
}

fn init_bound(layer: usize, fan_in: usize, omega: f32) -> f32 {
    if layer == 0 {
        1.0 / fan_in as f32
    } else {
        (6.0 / fan_in as f32).sqrt() / omega
    }
}

/// Per-chunk activations retained for backpropagation.
struct Tape {
    /// `inputs[k]`: input to layer `k`, row-major `[n × fan_in]`.
    inputs: Vec<Vec<f64>>,
    /// `slopes[k]`: `ω₀·cos(ω₀·z)` of hidden layer `k`.
    slopes: Vec<Vec<f64>>,
    output: Vec<f64>,
    delta: Vec<f64>,
    carry: Vec<f64>,
}

impl Tape {
    fn new(net: &SirenNetwork) -> Self {
        let hidden = net.arch.hidden_layers();
        Self {
            inputs: vec![Vec::new(); hidden + 1],
            slopes: vec![Vec::new(); hidden],
            output: Vec::new(),
            delta: Vec::new(),
            carry: Vec::new(),
        }
    }

    fn run(&mut self, net: &SirenNetwork, coords: &[Coord], record_slopes: bool) {
        let n = coords.len();
        let omega = net.arch.freq_scale() as f64;
        let hidden = net.arch.hidden_layers();

        let first = &mut self.inputs[0];
        first.clear();
        first.extend(coords.iter().flatten());

        for (k, shape) in net.shapes.iter().enumerate() {
            let w = &net.params[shape.weights()];
            let b = &net.params[shape.bias()];
            let (before, after) = self.inputs.split_at_mut(k + 1);
            let input = &before[k];
            let is_hidden = k < hidden;
            let out = if is_hidden {
                &mut after[0]
            } else {
                &mut self.output
            };
            out.clear();
            out.resize(n * shape.fan_out, 0.0);
            if is_hidden && record_slopes {
                self.slopes[k].clear();
                self.slopes[k].resize(n * shape.fan_out, 0.0);
            }

            for p in 0..n {
                let a = &input[p * shape.fan_in..(p + 1) * shape.fan_in];
                for o in 0..shape.fan_out {
                    let row = &w[o * shape.fan_in..(o + 1) * shape.fan_in];
                    let z = b[o] + dot(row, a);
                    let idx = p * shape.fan_out + o;
                    if !is_hidden {
                        out[idx] = z;
                    } else if record_slopes {
                        let (s, c) = (omega * z).sin_cos();
                        out[idx] = s;
                        self.slopes[k][idx] = omega * c;
                    } else {
                        out[idx] = (omega * z).sin();
                    }
                }
            }
        }
    }

    /// Accumulates gradients of `scale · Σ (y − t)²` into `grad` and returns
    /// the chunk's sum of squared errors.
    fn backprop(&mut self, net: &SirenNetwork, targets: &[Rgb], scale: f64, grad: &mut [f64]) -> f64 {
        let n = targets.len();
        let mut sse = 0.0;
        self.delta.clear();
        for (y, t) in self.output.chunks_exact(OUT_DIM).zip(targets) {
            for c in 0..OUT_DIM {
                let r = y[c] - t[c];
                sse += r * r;
                self.delta.push(scale * r);
            }
        }

        for (k, shape) in net.shapes.iter().enumerate().rev() {
            let input = &self.inputs[k];
            let (fan_in, fan_out) = (shape.fan_in, shape.fan_out);
            let (gw, gb) = grad[shape.offset..shape.offset + shape.len()].split_at_mut(fan_in * fan_out);
            for p in 0..n {
                let a = &input[p * fan_in..(p + 1) * fan_in];
                for o in 0..fan_out {
                    let d = self.delta[p * fan_out + o];
                    gb[o] += d;
                    for (g, x) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(a) {
                        *g += d * x;
                    }
                }
            }
            if k == 0 {
                break;
            }

            // Propagate to the previous hidden layer's output, then through
            // its sine.
            let w = &net.params[shape.weights()];
            self.carry.clear();
            self.carry.resize(n * fan_in, 0.0);
            for p in 0..n {
                let da = &mut self.carry[p * fan_in..(p + 1) * fan_in];
                for o in 0..fan_out {
                    let d = self.delta[p * fan_out + o];
                    for (acc, wi) in da.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                        *acc += d * wi;
                    }
                }
            }
            for (c, s) in self.carry.iter_mut().zip(&self.slopes[k - 1]) {
                *c *= s;
            }
            std::mem::swap(&mut self.delta, &mut self.carry);
        }
        sse
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_force_count(arch: Architecture) -> usize {
        let l = arch.hidden_layers();
        let w = arch.width();
        let mut dims = vec![IN_DIM];
        dims.extend(std::iter::repeat_n(w, l));
        dims.push(OUT_DIM);
        let mut count = 0;
        for pair in dims.windows(2) {
            for _row in 0..pair[1] {
                for _col in 0..pair[0] {
                    count += 1;
                }
                count += 1; // bias entry
            }
        }
        count
    }

    #[test]
    fn param_count_matches_enumeration() {
        for l in 1..=15 {
            for w in 1..=64 {
                let arch = Architecture::with_default_freq(l, w).unwrap();
                assert_eq!(arch.param_count(), brute_force_count(arch), "L={l} w={w}");
                let net = SirenNetwork::zeros(arch);
                assert_eq!(net.params().len(), arch.param_count());
                let last = arch.layer_shapes().last().copied().unwrap();
                assert_eq!(last.offset + last.len(), arch.param_count());
            }
        }
    }

    #[test]
    fn layer_shapes_chain() {
        let arch = Architecture::with_default_freq(4, 7).unwrap();
        let shapes = arch.layer_shapes();
        assert_eq!(shapes.len(), 5);
        assert_eq!(shapes[0].fan_in, IN_DIM);
        assert_eq!(shapes[4].fan_out, OUT_DIM);
        for pair in shapes.windows(2) {
            assert_eq!(pair[0].fan_out, pair[1].fan_in);
            assert_eq!(pair[0].offset + pair[0].len(), pair[1].offset);
        }
    }

    #[test]
    fn rejects_invalid_architectures() {
        assert!(Architecture::new(0, 4, 30.0).is_err());
        assert!(Architecture::new(2, 0, 30.0).is_err());
        assert!(Architecture::new(2, 4, 0.0).is_err());
        assert!(Architecture::new(2, 4, f32::NAN).is_err());
        assert!(Architecture::new(70_000, 4, 30.0).is_err());
    }

    #[test]
    fn first_layer_init_bound() {
        let arch = Architecture::with_default_freq(1, 1).unwrap();
        for seed in 0..200 {
            let net = SirenNetwork::init_siren(arch, seed);
            for &v in net.weights(0).iter().chain(net.bias(0)) {
                assert!((-0.5..=0.5).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn hidden_layer_init_bound() {
        // √(6/20)/30 ≈ 0.018257
        let bound = (6.0f64 / 20.0).sqrt() / 30.0;
        let arch = Architecture::with_default_freq(5, 20).unwrap();
        let mut max_abs = 0.0f64;
        let mut seen = 0usize;
        let mut seed = 0;
        while seen < 1_000_000 {
            let net = SirenNetwork::init_siren(arch, seed);
            for &v in net.weights(1) {
                max_abs = max_abs.max(v.abs());
            }
            seen += net.weights(1).len();
            seed += 1;
        }
        assert!(max_abs <= bound + 1e-9, "{max_abs} > {bound}");
        // The interval is actually used, not just a subset of it.
        assert!(max_abs > 0.99 * bound);
    }

    #[test]
    fn init_is_deterministic_and_on_f32_grid() {
        let arch = Architecture::with_default_freq(3, 9).unwrap();
        let a = SirenNetwork::init_siren(arch, 42);
        let b = SirenNetwork::init_siren(arch, 42);
        let c = SirenNetwork::init_siren(arch, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for &p in a.params() {
            assert_eq!(p, p as f32 as f64);
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = SirenNetwork::zeros(Architecture::with_default_freq(3, 5).unwrap());
        let out = net.forward(&[[0.3, -0.7], [1.0, 1.0]]);
        assert_eq!(out, vec![[0.0; 3]; 2]);
    }

    #[test]
    fn forward_preserves_batch_length_and_order() {
        let net = SirenNetwork::init_siren(Architecture::with_default_freq(2, 8).unwrap(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<Coord> = (0..1000)
            .map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
            .collect();
        let batch = net.forward(&coords);
        assert_eq!(batch.len(), coords.len());
        for (c, y) in coords.iter().zip(&batch) {
            assert_eq!(net.forward(&[*c])[0], *y);
        }
        let reversed: Vec<Coord> = coords.iter().rev().copied().collect();
        let rev_out = net.forward(&reversed);
        assert!(rev_out.iter().rev().eq(batch.iter()));
    }

    #[test]
    fn backward_rejects_mismatched_batches() {
        let net = SirenNetwork::zeros(Architecture::with_default_freq(1, 2).unwrap());
        assert!(matches!(
            net.backward(&[[0.0, 0.0]], &[]),
            Err(CoinError::ShapeMismatch { .. })
        ));
        assert!(matches!(net.backward(&[], &[]), Err(CoinError::EmptyBatch)));
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradient() {
        let net = SirenNetwork::init_siren(Architecture::with_default_freq(3, 6).unwrap(), 9);
        let coords: Vec<Coord> = (0..40).map(|i| [i as f64 / 40.0, -0.5]).collect();
        let targets = net.forward(&coords);
        let (loss, grads) = net.backward(&coords, &targets).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn single_unit_gradient_matches_hand_derivation() {
        // One hidden unit: h = sin(ω(a·x + b·y + c)), y_k = d_k·h + e_k.
        let arch = Architecture::new(1, 1, 30.0).unwrap();
        let params = vec![0.11, -0.07, 0.02, 0.5, -0.3, 0.8, 0.1, 0.2, -0.1];
        let net = SirenNetwork::from_params(arch, params.clone()).unwrap();
        let (x, y) = (0.4, -0.6);
        let target = [0.2, 0.7, 0.1];
        let (loss, grads) = net.backward(&[[x, y]], &[target]).unwrap();

        let omega = 30.0;
        let (a, b, c) = (params[0], params[1], params[2]);
        let d = [params[3], params[4], params[5]];
        let e = [params[6], params[7], params[8]];
        let u = omega * (a * x + b * y + c);
        let h = u.sin();
        let r: Vec<f64> = (0..3).map(|k| d[k] * h + e[k] - target[k]).collect();
        let expected_loss = r.iter().map(|v| v * v).sum::<f64>() / 3.0;
        let dl_dy: Vec<f64> = r.iter().map(|v| 2.0 * v / 3.0).collect();
        let dl_dh: f64 = (0..3).map(|k| dl_dy[k] * d[k]).sum();
        let dl_dz = dl_dh * omega * u.cos();
        let expected = [
            dl_dz * x,
            dl_dz * y,
            dl_dz,
            dl_dy[0] * h,
            dl_dy[1] * h,
            dl_dy[2] * h,
            dl_dy[0],
            dl_dy[1],
            dl_dy[2],
        ];

        assert!((loss - expected_loss).abs() < 1e-15);
        for (g, e) in grads.values().iter().zip(expected) {
            assert!((g - e).abs() <= 1e-13 * e.abs().max(1.0), "{g} vs {e}");
        }
    }

    #[test]
    fn gradient_is_independent_of_thread_count() {
        let net = SirenNetwork::init_siren(Architecture::with_default_freq(2, 10).unwrap(), 3);
        let coords: Vec<Coord> = (0..5000)
            .map(|i| [((i * 37) % 101) as f64 / 50.0 - 1.0, ((i * 11) % 97) as f64 / 48.0 - 1.0])
            .collect();
        let targets: Vec<Rgb> = coords.iter().map(|c| [c[0].abs(), c[1].abs(), 0.5]).collect();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| net.backward(&coords, &targets).unwrap());
        let b = multi.install(|| net.backward(&coords, &targets).unwrap());
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }
}
