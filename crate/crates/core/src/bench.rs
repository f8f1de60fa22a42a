//! Rate–distortion benchmark over a directory of images.
//!
//! Each (image, bitrate label) job encodes with the label's preset
//! architecture, then scores the 32-bit model, the 16-bit model, and the
//! 16-bit model after an 8-bit save. One aggregate row per label carries the
//! mean over successful jobs. The `baseline_*` columns are left empty for
//! external tools to fill.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::arch_search::preset;
use crate::container::ImageDims;
use crate::decoder::decode;
use crate::encoder::{encode, TrainConfig};
use crate::error::{CoinError, Result};
use crate::image_plane::{load_image, psnr, ImagePlane};
use crate::quantize::{bpp, quantize, Precision};

pub const CSV_HEADER: [&str; 12] = [
    "image_id",
    "bpp_label",
    "bpp_actual",
    "psnr_32bit",
    "psnr_16bit",
    "psnr_16bit_8bit",
    "wall_seconds",
    "iterations",
    "status",
    "baseline_codec",
    "baseline_bpp",
    "baseline_psnr",
];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub labels: Vec<f64>,
    pub train: TrainConfig,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Aggregate { images: usize },
    Error(String),
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Aggregate { images } => write!(f, "mean_of_{images}"),
            RowStatus::Error(msg) => write!(f, "error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image_id: String,
    pub bpp_label: f64,
    pub bpp_actual: f64,
    pub psnr_32bit: f64,
    pub psnr_16bit: f64,
    pub psnr_16bit_8bit: f64,
    pub wall_seconds: f64,
    pub iterations: u64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchRow>,
    pub warnings: Vec<String>,
}

/// PNG files directly inside `dir`, sorted by file name.
pub fn list_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Scores one already-loaded image at one preset label.
pub fn bench_image(image_id: &str, image: &ImagePlane, label: f64, train: TrainConfig) -> Result<BenchRow> {
    let start = Instant::now();
    let arch = preset(label)?;
    let (net, _) = encode(image, arch, train)?;
    let dims = ImageDims::new(image.width(), image.height());

    let full = decode(&quantize(&net, Precision::Single), dims)?;
    let halfq = decode(&quantize(&net, Precision::Half), dims)?;
    let saved = ImagePlane::from_rgb8(&halfq.to_rgb8())?;

    Ok(BenchRow {
        image_id: image_id.to_string(),
        bpp_label: label,
        bpp_actual: bpp(arch, Precision::Half, image.width(), image.height()),
        psnr_32bit: psnr(image, &full)?,
        psnr_16bit: psnr(image, &halfq)?,
        psnr_16bit_8bit: psnr(image, &saved)?,
        wall_seconds: start.elapsed().as_secs_f64(),
        iterations: train.iterations,
        status: RowStatus::Ok,
    })
}

fn error_row(image_id: &str, label: f64, iterations: u64, err: &CoinError) -> BenchRow {
    BenchRow {
        image_id: image_id.to_string(),
        bpp_label: label,
        bpp_actual: f64::NAN,
        psnr_32bit: f64::NAN,
        psnr_16bit: f64::NAN,
        psnr_16bit_8bit: f64::NAN,
        wall_seconds: 0.0,
        iterations,
        status: RowStatus::Error(err.to_string()),
    }
}

/// Runs every (image, label) job. Per-job failures become error rows.
pub fn run_bench(corpus_dir: &Path, cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.train.validate()?;
    for &label in &cfg.labels {
        preset(label)?;
    }
    let files = list_corpus(corpus_dir)?;
    let mut report = BenchReport::default();
    if files.is_empty() {
        report
            .warnings
            .push(CoinError::EmptyCorpus(corpus_dir.to_path_buf()).to_string());
        return Ok(report);
    }

    let jobs: Vec<(&PathBuf, f64)> = files
        .iter()
        .flat_map(|f| cfg.labels.iter().map(move |&l| (f, l)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CoinError::InvalidConfig(e.to_string()))?;

    report.rows = pool.install(|| {
        jobs.par_iter()
            .map(|(path, label)| {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                load_image(path)
                    .and_then(|img| bench_image(&id, &img, *label, cfg.train))
                    .unwrap_or_else(|e| error_row(&id, *label, cfg.train.iterations, &e))
            })
            .collect()
    });

    for &label in &cfg.labels {
        let ok: Vec<&BenchRow> = report
            .rows
            .iter()
            .filter(|r| r.bpp_label == label && r.status == RowStatus::Ok)
            .collect();
        if ok.is_empty() {
            continue;
        }
        let n = ok.len() as f64;
        let mean = |f: fn(&BenchRow) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / n;
        report.aggregates.push(BenchRow {
            image_id: "mean".into(),
            bpp_label: label,
            bpp_actual: mean(|r| r.bpp_actual),
            psnr_32bit: mean(|r| r.psnr_32bit),
            psnr_16bit: mean(|r| r.psnr_16bit),
            psnr_16bit_8bit: mean(|r| r.psnr_16bit_8bit),
            wall_seconds: ok.iter().map(|r| r.wall_seconds).sum(),
            iterations: cfg.train.iterations,
            status: RowStatus::Aggregate { images: ok.len() },
        });
    }
    Ok(report)
}

fn fmt_num(v: f64, digits: usize) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.digits$}")
    }
}

pub fn write_bench_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in report.rows.iter().chain(&report.aggregates) {
        w.write_record([
            r.image_id.clone(),
            format!("{}", r.bpp_label),
            fmt_num(r.bpp_actual, 6),
            fmt_num(r.psnr_32bit, 4),
            fmt_num(r.psnr_16bit, 4),
            fmt_num(r.psnr_16bit_8bit, 4),
            format!("{:.3}", r.wall_seconds),
            r.iterations.to_string(),
            r.status.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchConfig {
        BenchConfig {
            labels: vec![0.07],
            train: TrainConfig {
                iterations: 5,
                log_every: 5,
                ..TrainConfig::default()
            },
            threads: 1,
        }
    }

    #[test]
    fn empty_corpus_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_bench(dir.path(), &quick()).unwrap();
        assert!(report.rows.is_empty() && report.aggregates.is_empty());
        assert_eq!(report.warnings.len(), 1);
        let mut out = Vec::new();
        write_bench_csv(&report, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    }

    #[test]
    fn one_image_one_label() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImagePlane::filled(6, 4, [0.2, 0.5, 0.7]).unwrap();
        crate::image_plane::save_image(&img, dir.path().join("flat.png")).unwrap();
        let report = run_bench(dir.path(), &quick()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.aggregates.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.image_id, "flat");
        assert_eq!(row.status, RowStatus::Ok);
        assert!((row.bpp_actual - 1803.0 * 16.0 / 24.0).abs() < 1e-9);
        assert_eq!(report.aggregates[0].psnr_16bit, row.psnr_16bit);
    }

    #[test]
    fn broken_file_becomes_error_row() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("broken.png"), b"nope").unwrap();
        let img = ImagePlane::filled(3, 3, [0.4, 0.4, 0.4]).unwrap();
        crate::image_plane::save_image(&img, dir.path().join("ok.png")).unwrap();
        let report = run_bench(dir.path(), &quick()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(matches!(report.rows[0].status, RowStatus::Error(_)));
        assert_eq!(report.rows[1].status, RowStatus::Ok);
        assert_eq!(report.aggregates[0].status, RowStatus::Aggregate { images: 1 });
    }

    #[test]
    fn unknown_label_is_rejected_up_front() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = BenchConfig { labels: vec![0.42], ..quick() };
        assert!(matches!(run_bench(dir.path(), &cfg), Err(CoinError::UnknownPreset(_))));
    }
}
