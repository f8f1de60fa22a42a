//! List the architectures that fit a bitrate on 768×512 images, then train
//! the closest few on a small image and rank them.
//!
//! ```bash
//! cargo run --release -p coin --example architecture_search -- 0.3
//! ```

use std::path::PathBuf;

use coin::arch_search::{sweep, valid_architectures, write_sweep_csv};
use coin::quantize::bpp;
use coin::{load_image, Precision, TrainConfig};

fn main() -> coin::Result<()> {
    let target: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let archs = valid_architectures(target, 768, 512, Precision::Half, 0.05)?;
    println!("{} architectures within 5% of {target} bpp on 768x512:", archs.len());
    for a in archs.iter().take(10) {
        println!("  {:>2} x {:>3}  {:>6} params  {:.4} bpp", a.hidden_layers(), a.width(), a.param_count(), bpp(*a, Precision::Half, 768, 512));
    }

    // Budget the sweep on a thumbnail with the same candidates.
    let image = load_image(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/astronaut_64.png"))?;
    let cfg = TrainConfig {
        iterations: 200,
        ..TrainConfig::default()
    };
    let rows = sweep(&image, &archs[..archs.len().min(4)], cfg)?;
    write_sweep_csv(&rows, std::io::stdout())?;
    Ok(())
}
