//! Decode one model at several densities and over a sub-region, writing
//! PNGs to a temporary directory (or the directory given as argument).
//!
//! ```bash
//! cargo run --release -p coin --example progressive_decode -- /tmp/coin-out
//! ```

use std::path::PathBuf;

use coin::{decode, decode_progressive, encode, load_image, quantize, save_image};
use coin::{Architecture, ImageDims, Precision, Region, TrainConfig};

fn main() -> coin::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("coin-progressive"));
    std::fs::create_dir_all(&out_dir)?;

    let image = load_image(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/coffee_96x64.png"))?;
    let cfg = TrainConfig {
        iterations: 400,
        ..TrainConfig::default()
    };
    let (net, _) = encode(&image, Architecture::with_default_freq(4, 24)?, cfg)?;
    let q = quantize(&net, Precision::Half);
    let dims = ImageDims::new(image.width(), image.height());

    let full = decode(&q, dims)?;
    save_image(&full, out_dir.join("full.png"))?;

    for scale in [0.25, 0.5, 2.0, 4.0] {
        let img = decode_progressive(&q, dims, scale, None)?;
        let name = format!("scale_{scale}.png");
        save_image(&img, out_dir.join(&name))?;
        println!("{name}: {}x{}", img.width(), img.height());
    }

    // Only the pixels inside the region are evaluated.
    let region = Region::new(32, 16, 32, 32);
    let part = decode_progressive(&q, dims, 1.0, Some(region))?;
    assert_eq!(part, full.crop(region)?);
    save_image(&part, out_dir.join("region.png"))?;
    let zoom = decode_progressive(&q, dims, 4.0, Some(region))?;
    save_image(&zoom, out_dir.join("region_x4.png"))?;
    println!("region {}x{}, zoomed {}x{}", part.width(), part.height(), zoom.width(), zoom.height());
    println!("wrote {}", out_dir.display());
    Ok(())
}
