//! Architectures that fit a bits-per-pixel budget, the per-bitrate presets,
//! and a PSNR sweep over candidate architectures.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::encoder::{encode, RunMetrics, TrainConfig};
use crate::error::{CoinError, Result};
use crate::image_plane::ImagePlane;
use crate::quantize::{bpp, Precision};
use crate::siren::{Architecture, SirenNetwork, DEFAULT_FREQ_SCALE};

/// Largest hidden-layer count considered by [`valid_architectures`].
pub const MAX_HIDDEN_LAYERS: usize = 20;
/// Largest hidden width considered by [`valid_architectures`].
pub const MAX_WIDTH: usize = 128;

/// Nominal bitrate → (hidden layers, width) for 768×512 images at 16 bits.
pub const PRESETS: [(f64, usize, usize); 5] = [
    (0.07, 5, 20),
    (0.15, 5, 30),
    (0.3, 10, 28),
    (0.6, 10, 40),
    (1.2, 13, 49),
];

pub fn preset(bpp_label: f64) -> Result<Architecture> {
    PRESETS
        .iter()
        .find(|(label, _, _)| (label - bpp_label).abs() < 1e-9)
        .map(|&(_, l, w)| Architecture::new(l, w, DEFAULT_FREQ_SCALE).expect("preset is valid"))
        .ok_or(CoinError::UnknownPreset(bpp_label))
}

/// Every `(L, w)` in `[1, 20] × [1, 128]` whose bpp lies within
/// `target·(1 ± tolerance)`, closest first, ties broken by fewer layers and
/// then by narrower width.
pub fn valid_architectures(
    target_bpp: f64,
    width: usize,
    height: usize,
    precision: Precision,
    tolerance: f64,
) -> Result<Vec<Architecture>> {
    if !(target_bpp.is_finite() && target_bpp > 0.0) {
        return Err(CoinError::InvalidConfig(format!(
            "target bpp must be positive, got {target_bpp}"
        )));
    }
    if !(0.0..1.0).contains(&tolerance) {
        return Err(CoinError::InvalidConfig(format!(
            "tolerance must lie in [0, 1), got {tolerance}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(CoinError::InvalidConfig("image dimensions must be positive".into()));
    }
    let lo = target_bpp * (1.0 - tolerance);
    let hi = target_bpp * (1.0 + tolerance);

    let mut found: Vec<(f64, Architecture)> = Vec::new();
    for l in 1..=MAX_HIDDEN_LAYERS {
        for w in 1..=MAX_WIDTH {
            let arch = Architecture::new(l, w, DEFAULT_FREQ_SCALE)?;
            let rate = bpp(arch, precision, width, height);
            if rate > hi {
                // bpp grows with width; wider nets only get further away.
                break;
            }
            if rate >= lo {
                found.push(((rate - target_bpp).abs(), arch));
            }
        }
    }
    found.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.hidden_layers().cmp(&b.1.hidden_layers()))
            .then(a.1.width().cmp(&b.1.width()))
    });
    Ok(found.into_iter().map(|(_, a)| a).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub arch: Architecture,
    pub param_count: usize,
    /// Rate at 16-bit storage on the swept image.
    pub bpp: f64,
    pub best_psnr: f64,
    pub iterations: u64,
    pub seed: u64,
}

/// Encodes `image` once per candidate and returns rows sorted by best PSNR,
/// highest first.
pub fn sweep(image: &ImagePlane, candidates: &[Architecture], cfg: TrainConfig) -> Result<Vec<SweepRow>> {
    Ok(sweep_with_networks(image, candidates, cfg)?
        .into_iter()
        .map(|(row, _, _)| row)
        .collect())
}

/// [`sweep`], also returning each candidate's best network and metrics.
pub fn sweep_with_networks(
    image: &ImagePlane,
    candidates: &[Architecture],
    cfg: TrainConfig,
) -> Result<Vec<(SweepRow, SirenNetwork, RunMetrics)>> {
    if candidates.is_empty() {
        return Err(CoinError::InvalidConfig("sweep needs at least one candidate".into()));
    }
    let mut rows = candidates
        .par_iter()
        .map(|&arch| {
            let (net, metrics) = encode(image, arch, cfg)?;
            let row = SweepRow {
                arch,
                param_count: arch.param_count(),
                bpp: bpp(arch, Precision::Half, image.width(), image.height()),
                best_psnr: metrics.best_psnr,
                iterations: cfg.iterations,
                seed: cfg.seed,
            };
            Ok((row, net, metrics))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|(a, _, _), (b, _, _)| {
        b.best_psnr
            .partial_cmp(&a.best_psnr)
            .unwrap_or(Ordering::Equal)
            .then(a.arch.hidden_layers().cmp(&b.arch.hidden_layers()))
            .then(a.arch.width().cmp(&b.arch.width()))
    });
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hidden_layers", "width", "param_count", "bpp", "best_psnr_db", "iterations", "seed"])?;
    for r in rows {
        w.write_record([
            r.arch.hidden_layers().to_string(),
            r.arch.width().to_string(),
            r.param_count.to_string(),
            format!("{:.6}", r.bpp),
            format!("{:.4}", r.best_psnr),
            r.iterations.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
