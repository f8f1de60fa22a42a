//! Fit a network to a PNG and print the PSNR at every evaluation.
//!
//! ```bash
//! cargo run --release -p coin --example fit_image -- [image.png] [iterations]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use coin::arch_search::preset;
use coin::encoder::{encode_with_progress, mean_color_psnr};
use coin::{load_image, TrainConfig};

fn main() -> coin::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/astronaut_64.png"));
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);

    let image = load_image(&path)?;
    let arch = preset(0.07)?;
    let cfg = TrainConfig {
        iterations,
        log_every: 100,
        ..TrainConfig::default()
    };
    println!("{}x{} image, {} ({} params)", image.width(), image.height(), arch, arch.param_count());
    println!("mean-color baseline: {:.2} dB", mean_color_psnr(&image));

    let start = Instant::now();
    let (_, metrics) = encode_with_progress(&image, arch, cfg, |p| {
        println!("{:>6}  loss {:.3e}  psnr {:.2} dB", p.iteration, p.loss, p.psnr);
    })?;
    println!(
        "best {:.2} dB at iteration {} ({:.1}s)",
        metrics.best_psnr,
        metrics.best_iteration,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
