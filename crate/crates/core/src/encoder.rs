//! Encoding: overfit a network to one image with full-batch Adam, keeping
//! the snapshot with the highest PSNR seen at any evaluation.
//!
//! The network is evaluated (decoded, clamped, scored) every `log_every`
//! iterations and at the final iteration. Training minimizes the mean
//! squared error of the unclamped output over every pixel and channel.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::container::{decode_coin, encode_coin, ImageDims};
use crate::decoder::render;
use crate::error::{CoinError, Result};
use crate::image_plane::{full_grid, psnr, CoordGrid, ImagePlane};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::quantize::{dequantize, quantize, Precision};
use crate::siren::{Architecture, Rgb, SirenNetwork};
use crate::wire::{Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    pub lr: f64,
    pub seed: u64,
    /// Evaluation cadence for the trace and best-PSNR checkpointing.
    pub log_every: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            iterations: 50_000,
            lr: adam.lr,
            seed: 0,
            log_every: 50,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(CoinError::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(CoinError::InvalidConfig("log_every must be at least 1".into()));
        }
        self.adam().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: u64,
    pub loss: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub trace: Vec<TracePoint>,
    pub best_psnr: f64,
    pub best_iteration: u64,
}

impl Default for RunMetrics {
    fn default() -> Self {
        Self {
            trace: Vec::new(),
            best_psnr: f64::NEG_INFINITY,
            best_iteration: 0,
        }
    }
}

impl RunMetrics {
    /// Running maximum of the traced PSNR.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trace
            .iter()
            .scan(f64::NEG_INFINITY, |best, p| {
                *best = best.max(p.psnr);
                Some(*best)
            })
            .collect()
    }

    /// CSV with columns `iteration,loss,psnr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "loss", "psnr"])?;
        for p in &self.trace {
            w.write_record([p.iteration.to_string(), p.loss.to_string(), p.psnr.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Incremental encoder; [`encode`] runs one to completion.
pub struct Encoder<'a> {
    image: &'a ImagePlane,
    grid: CoordGrid,
    targets: Vec<Rgb>,
    cfg: TrainConfig,
    fingerprint: u64,
    net: SirenNetwork,
    best: SirenNetwork,
    adam: AdamState,
    metrics: RunMetrics,
    iteration: u64,
}

impl<'a> Encoder<'a> {
    pub fn new(image: &'a ImagePlane, arch: Architecture, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let net = SirenNetwork::init_siren(arch, cfg.seed);
        Ok(Self {
            grid: full_grid(image.width(), image.height()),
            targets: image.targets(),
            fingerprint: fingerprint(image, arch, &cfg),
            best: net.clone(),
            adam: AdamState::new(cfg.adam(), arch.param_count())?,
            net,
            metrics: RunMetrics::default(),
            iteration: 0,
            image,
            cfg,
        })
    }

    /// Continues from `checkpoint`. `cfg` may raise `iterations`; every other
    /// field, the architecture and the image must match the original run.
    pub fn resume(image: &'a ImagePlane, checkpoint: Checkpoint, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = checkpoint.network.architecture();
        let expected = fingerprint(image, arch, &cfg);
        if expected != checkpoint.fingerprint {
            return Err(CoinError::ConfigMismatch {
                expected,
                found: checkpoint.fingerprint,
            });
        }
        Ok(Self {
            grid: full_grid(image.width(), image.height()),
            targets: image.targets(),
            fingerprint: expected,
            net: checkpoint.network,
            best: checkpoint.best,
            adam: checkpoint.adam,
            metrics: checkpoint.metrics,
            iteration: checkpoint.iteration,
            image,
            cfg,
        })
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.cfg.iterations
    }

    pub fn network(&self) -> &SirenNetwork {
        &self.net
    }

    pub fn best_network(&self) -> &SirenNetwork {
        &self.best
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    /// Runs up to `n` more iterations (stopping at `cfg.iterations`).
    pub fn run_steps(&mut self, n: u64) -> Result<()> {
        self.run_steps_with(n, |_| {})
    }

    pub fn run_steps_with(&mut self, n: u64, mut on_eval: impl FnMut(&TracePoint)) -> Result<()> {
        let stop = self.cfg.iterations.min(self.iteration.saturating_add(n));
        while self.iteration < stop {
            self.step(&mut on_eval)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_steps(u64::MAX)
    }

    fn step(&mut self, on_eval: &mut impl FnMut(&TracePoint)) -> Result<()> {
        let next = self.iteration + 1;
        let (loss, grads) = self.net.backward(&self.grid.coords, &self.targets)?;
        if !loss.is_finite() {
            return Err(CoinError::Diverged {
                iteration: next,
                loss,
            });
        }
        adam_step(&mut self.net, &grads, &mut self.adam)?;
        self.iteration = next;

        if next.is_multiple_of(self.cfg.log_every) || next == self.cfg.iterations {
            let point = self.evaluate()?;
            if point.psnr > self.metrics.best_psnr {
                self.metrics.best_psnr = point.psnr;
                self.metrics.best_iteration = point.iteration;
                self.best.clone_from(&self.net);
            }
            self.metrics.trace.push(point);
            on_eval(&point);
        }
        Ok(())
    }

    fn evaluate(&self) -> Result<TracePoint> {
        let outputs = self.net.forward(&self.grid.coords);
        let mut sse = 0.0;
        for (y, t) in outputs.iter().zip(&self.targets) {
            for c in 0..3 {
                let r = y[c] - t[c];
                sse += r * r;
            }
        }
        let loss = sse / (3 * outputs.len()) as f64;
        if !loss.is_finite() {
            return Err(CoinError::Diverged {
                iteration: self.iteration,
                loss,
            });
        }
        let recon = ImagePlane::from_outputs(self.grid.width, self.grid.height, &outputs)?;
        Ok(TracePoint {
            iteration: self.iteration,
            loss,
            psnr: psnr(self.image, &recon)?,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            fingerprint: self.fingerprint,
            iteration: self.iteration,
            image_dims: ImageDims::new(self.image.width(), self.image.height()),
            network: self.net.clone(),
            best: self.best.clone(),
            adam: self.adam.clone(),
            metrics: self.metrics.clone(),
        }
    }

    /// The best snapshot and the run's metrics.
    pub fn finish(self) -> (SirenNetwork, RunMetrics) {
        (self.best, self.metrics)
    }
}

/// Overfits a freshly initialized network to `image`.
pub fn encode(image: &ImagePlane, arch: Architecture, cfg: TrainConfig) -> Result<(SirenNetwork, RunMetrics)> {
    encode_with_progress(image, arch, cfg, |_| {})
}

pub fn encode_with_progress(
    image: &ImagePlane,
    arch: Architecture,
    cfg: TrainConfig,
    on_eval: impl FnMut(&TracePoint),
) -> Result<(SirenNetwork, RunMetrics)> {
    let mut encoder = Encoder::new(image, arch, cfg)?;
    encoder.run_steps_with(u64::MAX, on_eval)?;
    Ok(encoder.finish())
}

/// PSNR of the constant image filled with `image`'s mean colour.
pub fn mean_color_psnr(image: &ImagePlane) -> f64 {
    let flat = ImagePlane::filled(image.width(), image.height(), image.mean_color())
        .expect("mean of [0,1] values lies in [0,1]");
    psnr(image, &flat).expect("same dimensions")
}

/// PSNR of `net` decoded over `image`'s grid.
pub fn network_psnr(net: &SirenNetwork, image: &ImagePlane) -> f64 {
    let recon = render(net, &full_grid(image.width(), image.height()));
    psnr(image, &recon).expect("same dimensions")
}

/// Digest of everything that must agree for a resumed run to continue the
/// original one. `iterations` is excluded so a run can be extended.
fn fingerprint(image: &ImagePlane, arch: Architecture, cfg: &TrainConfig) -> u64 {
    let mut h = Sha256::new();
    h.update(b"coin-train-v1");
    h.update((arch.hidden_layers() as u16).to_le_bytes());
    h.update((arch.width() as u16).to_le_bytes());
    h.update(arch.freq_scale().to_le_bytes());
    h.update((image.width() as u64).to_le_bytes());
    h.update((image.height() as u64).to_le_bytes());
    for v in image.pixels() {
        h.update(v.to_le_bytes());
    }
    for v in [cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon] {
        h.update(v.to_le_bytes());
    }
    h.update(cfg.seed.to_le_bytes());
    h.update(cfg.log_every.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"COIC";
pub const CHECKPOINT_VERSION: u8 = 1;

/// Resumable encoder state.
///
/// On disk: magic `"COIC"`, version byte, three zero bytes, then the run
/// fingerprint and iteration (u64 each), the current and best networks as
/// length-prefixed 32-bit `.coin` records, the Adam state (hyperparameters,
/// step, both moment buffers as f64) and the metrics trace. Little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: u64,
    pub iteration: u64,
    pub image_dims: ImageDims,
    pub network: SirenNetwork,
    pub best: SirenNetwork,
    pub adam: AdamState,
    pub metrics: RunMetrics,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(&CHECKPOINT_MAGIC);
        w.u8(CHECKPOINT_VERSION);
        w.bytes(&[0, 0, 0]);
        w.u64(self.fingerprint);
        w.u64(self.iteration);
        for net in [&self.network, &self.best] {
            let record = encode_coin(&quantize(net, Precision::Single), self.image_dims)?;
            w.u32(record.len() as u32);
            w.bytes(&record);
        }
        self.adam.write_to(&mut w);
        w.f64(self.metrics.best_psnr);
        w.u64(self.metrics.best_iteration);
        w.u32(self.metrics.trace.len() as u32);
        for p in &self.metrics.trace {
            w.u64(p.iteration);
            w.f64(p.loss);
            w.f64(p.psnr);
        }
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != CHECKPOINT_MAGIC {
            return Err(CoinError::BadMagic(magic));
        }
        let version = r.u8()?;
        if version != CHECKPOINT_VERSION {
            return Err(CoinError::UnsupportedVersion(version));
        }
        r.take(3)?;
        let fingerprint = r.u64()?;
        let iteration = r.u64()?;
        let read_net = |r: &mut Reader<'_>| -> Result<(SirenNetwork, ImageDims)> {
            let len = r.u32()? as usize;
            let (q, dims) = decode_coin(r.take(len)?)?;
            Ok((dequantize(&q)?, dims))
        };
        let (network, image_dims) = read_net(&mut r)?;
        let (best, _) = read_net(&mut r)?;
        let adam = AdamState::read_from(&mut r)?;
        if adam.first_moment().len() != network.params().len() {
            return Err(CoinError::ShapeMismatch {
                what: "optimizer state",
                expected: network.params().len(),
                actual: adam.first_moment().len(),
            });
        }
        let best_psnr = r.f64()?;
        let best_iteration = r.u64()?;
        let n = r.u32()? as usize;
        let mut trace = Vec::with_capacity(n.min(r.remaining() / 24));
        for _ in 0..n {
            trace.push(TracePoint {
                iteration: r.u64()?,
                loss: r.f64()?,
                psnr: r.f64()?,
            });
        }
        if !r.is_empty() {
            return Err(CoinError::LengthMismatch {
                expected: bytes.len() - r.remaining(),
                actual: bytes.len(),
            });
        }
        Ok(Self {
            fingerprint,
            iteration,
            image_dims,
            network,
            best,
            adam,
            metrics: RunMetrics {
                trace,
                best_psnr,
                best_iteration,
            },
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(w: usize, h: usize) -> ImagePlane {
        let mut px = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let fx = x as f32 / (w.max(2) - 1) as f32;
                let fy = y as f32 / (h.max(2) - 1) as f32;
                px.extend([fx, fy, 0.5 * (fx + fy)]);
            }
        }
        ImagePlane::new(w, h, px).unwrap()
    }

    fn cfg(iterations: u64) -> TrainConfig {
        TrainConfig {
            iterations,
            log_every: 10,
            lr: 1e-3,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let img = gradient_image(4, 4);
        let arch = Architecture::with_default_freq(1, 4).unwrap();
        assert!(matches!(encode(&img, arch, cfg(0)), Err(CoinError::InvalidConfig(_))));
    }

    #[test]
    fn one_iteration_returns_post_step_snapshot() {
        let img = gradient_image(6, 5);
        let arch = Architecture::with_default_freq(2, 8).unwrap();
        let (best, metrics) = encode(&img, arch, cfg(1)).unwrap();
        assert_ne!(best, SirenNetwork::init_siren(arch, 7));
        assert_eq!(metrics.trace.len(), 1);
        assert_eq!(metrics.best_iteration, 1);
        assert_eq!(metrics.best_psnr, network_psnr(&best, &img));
    }

    #[test]
    fn single_pixel_is_fit_exactly() {
        let img = ImagePlane::new(1, 1, vec![0.8, 0.3, 0.55]).unwrap();
        let arch = Architecture::with_default_freq(1, 4).unwrap();
        let (_, metrics) = encode(&img, arch, TrainConfig { iterations: 3000, ..cfg(0) }).unwrap();
        assert!(metrics.best_psnr > 60.0, "{}", metrics.best_psnr);
    }

    #[test]
    fn trace_cadence_and_monotone_best() {
        let img = gradient_image(12, 9);
        let arch = Architecture::with_default_freq(2, 10).unwrap();
        let (_, metrics) = encode(&img, arch, TrainConfig { iterations: 95, ..cfg(0) }).unwrap();
        let iters: Vec<u64> = metrics.trace.iter().map(|p| p.iteration).collect();
        assert_eq!(iters, vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 95]);
        let best = metrics.best_so_far();
        assert!(best.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*best.last().unwrap(), metrics.best_psnr);
        let at_best = metrics.trace.iter().find(|p| p.iteration == metrics.best_iteration).unwrap();
        assert_eq!(at_best.psnr, metrics.best_psnr);
    }

    #[test]
    fn vanishing_learning_rate_keeps_initial_network() {
        let img = gradient_image(8, 8);
        let arch = Architecture::with_default_freq(2, 6).unwrap();
        let config = TrainConfig { iterations: 20, lr: 1e-30, ..cfg(0) };
        let (best, metrics) = encode(&img, arch, config).unwrap();
        let init = SirenNetwork::init_siren(arch, config.seed);
        assert_eq!(best, init);
        let init_psnr = network_psnr(&init, &img);
        assert!(metrics.trace.iter().all(|p| p.psnr == init_psnr));
    }

    #[test]
    fn encode_is_deterministic() {
        let img = gradient_image(10, 7);
        let arch = Architecture::with_default_freq(2, 6).unwrap();
        let a = encode(&img, arch, cfg(30)).unwrap();
        let b = encode(&img, arch, cfg(30)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let img = gradient_image(4, 4);
        let arch = Architecture::with_default_freq(1, 3).unwrap();
        let config = TrainConfig { lr: 1e300, iterations: 50, ..cfg(0) };
        match encode(&img, arch, config) {
            Err(CoinError::Diverged { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn checkpoint_round_trip_and_resume() {
        let img = gradient_image(9, 9);
        let arch = Architecture::with_default_freq(2, 8).unwrap();
        let config = cfg(40);
        let mut enc = Encoder::new(&img, arch, config).unwrap();
        enc.run_steps(20).unwrap();
        let ckpt = enc.checkpoint();
        let restored = Checkpoint::from_bytes(&ckpt.to_bytes().unwrap()).unwrap();
        assert_eq!(restored, ckpt);

        let resumed = Encoder::resume(&img, restored.clone(), config).unwrap();
        assert_eq!(resumed.metrics().best_psnr, enc.metrics().best_psnr);
        assert_eq!(resumed.iteration(), 20);

        // Extending the iteration budget is allowed, changing the seed is not.
        assert!(Encoder::resume(&img, restored.clone(), TrainConfig { iterations: 80, ..config }).is_ok());
        assert!(matches!(
            Encoder::resume(&img, restored, TrainConfig { seed: 8, ..config }),
            Err(CoinError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let img = gradient_image(5, 5);
        let arch = Architecture::with_default_freq(1, 4).unwrap();
        let mut enc = Encoder::new(&img, arch, cfg(10)).unwrap();
        enc.run().unwrap();
        let bytes = enc.checkpoint().to_bytes().unwrap();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(CoinError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(1);
        assert!(matches!(Checkpoint::from_bytes(&long), Err(CoinError::LengthMismatch { .. })));
        let mut bad = bytes;
        bad[0] = b'Z';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CoinError::BadMagic(_))));
    }

    #[test]
    fn metrics_csv() {
        let metrics = RunMetrics {
            trace: vec![
                TracePoint { iteration: 50, loss: 0.5, psnr: 10.0 },
                TracePoint { iteration: 100, loss: 0.25, psnr: 12.5 },
            ],
            best_psnr: 12.5,
            best_iteration: 100,
        };
        let mut out = Vec::new();
        metrics.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "iteration,loss,psnr\n50,0.5,10\n100,0.25,12.5\n");
    }
}
