//! The `coin` command line: `encode`, `decode`, `info`, `bench`, `archs`.
//!
//! Every subcommand is a thin wrapper over library calls. Settings resolve
//! as flag, then `--config` file, then built-in default. The config file is
//! flat TOML (`key = value` lines); recognised keys are `iterations`, `lr`,
//! `seed`, `log_every`, `beta1`, `beta2`, `epsilon`, `freq_scale`,
//! `precision` and `threads`.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 numerical
//! failure (divergence).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::arch_search::{preset, sweep_with_networks, valid_architectures, write_sweep_csv};
use crate::bench::{run_bench, write_bench_csv, BenchConfig};
use crate::container::{decode_coin, encode_coin, ImageDims, HEADER_LEN};
use crate::decoder::{decode, decode_progressive};
use crate::encoder::{encode_with_progress, TrainConfig};
use crate::error::{CoinError, Result};
use crate::image_plane::{load_image, psnr, save_image, Region};
use crate::quantize::{bpp, quantize, Precision};
use crate::siren::{Architecture, DEFAULT_FREQ_SCALE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coin", version, about = "Compress images as overfitted sine-activated MLPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a network to an image and write a .coin file.
    Encode(EncodeArgs),
    /// Reconstruct an image from a .coin file.
    Decode(DecodeArgs),
    /// Print the header of a .coin file.
    Info(InfoArgs),
    /// Rate–distortion benchmark over a directory of PNG images.
    Bench(BenchArgs),
    /// List architectures that fit a bpp budget.
    Archs(ArchsArgs),
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Training iterations.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate PSNR and record metrics every N iterations.
    #[arg(long)]
    pub log_every: Option<u64>,
    /// Flat TOML file with default settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("model").required(true).args(["bpp", "arch", "search"])))]
pub struct EncodeArgs {
    pub input: PathBuf,
    /// Preset bitrate label: 0.07, 0.15, 0.3, 0.6 or 1.2.
    #[arg(long)]
    pub bpp: Option<f64>,
    /// Explicit architecture as HIDDEN_LAYERS,WIDTH.
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<(usize, usize)>,
    /// Search the architectures within --search-tol of this bpp budget.
    #[arg(long)]
    pub search: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub search_tol: f64,
    /// How many of the closest-rate candidates the search trains.
    #[arg(long, default_value_t = 3)]
    pub search_top: usize,
    #[arg(long)]
    pub freq_scale: Option<f32>,
    /// Stored bits per parameter (16 or 32).
    #[arg(long)]
    pub precision: Option<u8>,
    /// Output .coin path (default: input with .coin extension).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Metrics CSV path (default: output with .metrics.csv extension).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(short, long)]
    pub quiet: bool,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Sampling density relative to the encoded resolution.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Pixel rectangle X,Y,W,H of the encoded image.
    #[arg(long, value_parser = parse_region)]
    pub region: Option<Region>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    /// Comma-separated preset labels.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.07, 0.15, 0.3, 0.6, 1.2])]
    pub bpp: Vec<f64>,
    /// Worker threads (default: all available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// CSV output path (default: stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct ArchsArgs {
    #[arg(long)]
    pub bpp: f64,
    #[arg(long, default_value_t = 768)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long, default_value_t = 16)]
    pub precision: u8,
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

fn parse_arch(s: &str) -> std::result::Result<(usize, usize), String> {
    let (l, w) = s
        .split_once(',')
        .ok_or_else(|| format!("expected HIDDEN_LAYERS,WIDTH, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(l)?, parse(w)?))
}

fn parse_region(s: &str) -> std::result::Result<Region, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, w, h] => Ok(Region::new(x, y, w, h)),
        _ => Err(format!("expected X,Y,W,H, got {s:?}")),
    }
}

/// Settings read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub iterations: Option<u64>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub log_every: Option<u64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub freq_scale: Option<f32>,
    pub precision: Option<u8>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CoinError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

impl TrainArgs {
    fn file_config(&self) -> Result<FileConfig> {
        self.config.as_deref().map(FileConfig::load).transpose().map(Option::unwrap_or_default)
    }

    fn resolve(&self, file: &FileConfig) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            iterations: self.iters.or(file.iterations).unwrap_or(d.iterations),
            lr: self.lr.or(file.lr).unwrap_or(d.lr),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            log_every: self.log_every.or(file.log_every).unwrap_or(d.log_every),
            beta1: file.beta1.unwrap_or(d.beta1),
            beta2: file.beta2.unwrap_or(d.beta2),
            epsilon: file.epsilon.unwrap_or(d.epsilon),
        }
    }
}

pub fn exit_code(err: &CoinError) -> i32 {
    use CoinError::*;
    match err {
        Io(_) | Image(_) | Csv(_) | InvalidImage(_) | BadMagic(_) | UnsupportedVersion(_)
        | UnsupportedPrecision(_) | Truncated { .. } | LengthMismatch { .. } | InvalidHeader(_)
        | EmptyCorpus(_) => EXIT_IO,
        Diverged { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Encode(args) => cmd_encode(&args, out, err),
        Command::Decode(args) => cmd_decode(&args, out),
        Command::Info(args) => cmd_info(&args, out),
        Command::Bench(args) => cmd_bench(&args, out, err),
        Command::Archs(args) => cmd_archs(&args, out),
    }
}

fn cmd_encode(args: &EncodeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let image = load_image(&args.input)?;
    let file = args.train.file_config()?;
    let cfg = args.train.resolve(&file);
    cfg.validate()?;
    let precision = Precision::from_bits(args.precision.or(file.precision).unwrap_or(16))?;
    let freq = args.freq_scale.or(file.freq_scale);
    let (w, h) = image.dims();

    let (net, metrics) = if let Some(budget) = args.search {
        let mut candidates = valid_architectures(budget, w, h, precision, args.search_tol)?;
        candidates.truncate(args.search_top.max(1));
        if let Some(f) = freq {
            candidates = candidates
                .iter()
                .map(|a| Architecture::new(a.hidden_layers(), a.width(), f))
                .collect::<Result<_>>()?;
        }
        if candidates.is_empty() {
            return Err(CoinError::InvalidConfig(format!(
                "no architecture within {:.1}% of {budget} bpp",
                args.search_tol * 100.0
            )));
        }
        let mut results = sweep_with_networks(&image, &candidates, cfg)?;
        let rows: Vec<_> = results.iter().map(|(r, _, _)| r.clone()).collect();
        write_sweep_csv(&rows, &mut *out)?;
        let (_, net, metrics) = results.swap_remove(0);
        (net, metrics)
    } else {
        let arch = match (args.bpp, args.arch) {
            (Some(label), _) => {
                let p = preset(label)?;
                Architecture::new(p.hidden_layers(), p.width(), freq.unwrap_or(p.freq_scale()))?
            }
            (None, Some((l, width))) => Architecture::new(l, width, freq.unwrap_or(DEFAULT_FREQ_SCALE))?,
            (None, None) => unreachable!("clap enforces one model source"),
        };
        let quiet = args.quiet;
        encode_with_progress(&image, arch, cfg, |p| {
            if !quiet {
                let _ = writeln!(err, "iter {:>7}  loss {:.6e}  psnr {:.3} dB", p.iteration, p.loss, p.psnr);
            }
        })?
    };

    let arch = net.architecture();
    let q = quantize(&net, precision);
    let dims = ImageDims::new(w, h);
    let bytes = encode_coin(&q, dims)?;
    let coin_path = args.out.clone().unwrap_or_else(|| args.input.with_extension("coin"));
    fs::write(&coin_path, &bytes)?;
    let metrics_path = args
        .metrics
        .clone()
        .unwrap_or_else(|| coin_path.with_extension("metrics.csv"));
    metrics.write_csv(fs::File::create(&metrics_path)?)?;

    let decoded_psnr = psnr(&image, &decode(&q, dims)?)?;
    writeln!(out, "architecture: {} hidden layers x {} (omega_0 {})", arch.hidden_layers(), arch.width(), arch.freq_scale())?;
    writeln!(out, "best psnr: {:.4} dB at iteration {}", metrics.best_psnr, metrics.best_iteration)?;
    if let Some(last) = metrics.trace.last() {
        writeln!(out, "final psnr: {:.4} dB", last.psnr)?;
    }
    writeln!(out, "psnr after {}-bit storage: {:.4} dB", precision.bits(), decoded_psnr)?;
    writeln!(out, "bpp: {:.6}", bpp(arch, precision, w, h))?;
    writeln!(out, "file: {} ({} bytes)", coin_path.display(), bytes.len())?;
    Ok(())
}

fn cmd_decode(args: &DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let (q, dims) = decode_coin(&fs::read(&args.input)?)?;
    let img = decode_progressive(&q, dims, args.scale, args.region)?;
    save_image(&img, &args.out)?;
    writeln!(out, "wrote {} ({}x{})", args.out.display(), img.width(), img.height())?;
    Ok(())
}

fn cmd_info(args: &InfoArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = fs::read(&args.input)?;
    let (q, dims) = decode_coin(&bytes)?;
    let arch = q.arch;
    let digest = Sha256::digest(&bytes[HEADER_LEN..]);
    writeln!(out, "hidden_layers: {}", arch.hidden_layers())?;
    writeln!(out, "width: {}", arch.width())?;
    writeln!(out, "freq_scale: {}", arch.freq_scale())?;
    writeln!(out, "precision_bits: {}", q.precision().bits())?;
    writeln!(out, "image: {}x{}", dims.width, dims.height)?;
    writeln!(out, "param_count: {}", arch.param_count())?;
    writeln!(out, "bpp: {:.6}", bpp(arch, q.precision(), dims.width, dims.height))?;
    writeln!(out, "file_bytes: {}", bytes.len())?;
    writeln!(out, "payload_sha256: {digest:x}")?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let file = args.train.file_config()?;
    let cfg = BenchConfig {
        labels: args.bpp.clone(),
        train: args.train.resolve(&file),
        threads: args.threads.or(file.threads).unwrap_or(0),
    };
    let report = run_bench(&args.corpus, &cfg)?;
    for w in &report.warnings {
        writeln!(err, "warning: {w}")?;
    }
    match &args.out {
        Some(path) => write_bench_csv(&report, fs::File::create(path)?)?,
        None => write_bench_csv(&report, &mut *out)?,
    }
    Ok(())
}

fn cmd_archs(args: &ArchsArgs, out: &mut dyn Write) -> Result<()> {
    let precision = Precision::from_bits(args.precision)?;
    let archs = valid_architectures(args.bpp, args.width, args.height, precision, args.tol)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hidden_layers", "width", "param_count", "bpp"])?;
    for a in archs {
        w.write_record([
            a.hidden_layers().to_string(),
            a.width().to_string(),
            a.param_count().to_string(),
            format!("{:.6}", bpp(a, precision, args.width, args.height)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
