//! Train briefly, store the network at 32 and 16 bits, and compare the
//! reconstructions and file sizes.
//!
//! ```bash
//! cargo run --release -p coin --example quantize_and_store
//! ```

use std::path::PathBuf;

use coin::container::{decode_coin, encode_coin};
use coin::quantize::bpp;
use coin::{decode, encode, load_image, psnr, quantize, Architecture, ImageDims, Precision, TrainConfig};

fn main() -> coin::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chelsea_64.png");
    let image = load_image(path)?;
    let arch = Architecture::with_default_freq(4, 16)?;
    let cfg = TrainConfig {
        iterations: 500,
        ..TrainConfig::default()
    };
    let (net, metrics) = encode(&image, arch, cfg)?;
    println!("trained {arch}: best {:.2} dB", metrics.best_psnr);

    let dims = ImageDims::new(image.width(), image.height());
    for precision in [Precision::Single, Precision::Half] {
        let bytes = encode_coin(&quantize(&net, precision), dims)?;
        let (restored, restored_dims) = decode_coin(&bytes)?;
        let recon = decode(&restored, restored_dims)?;
        println!(
            "{:>2}-bit: {:>6} bytes, {:.3} bpp, {:.3} dB",
            precision.bits(),
            bytes.len(),
            bpp(arch, precision, dims.width, dims.height),
            psnr(&image, &recon)?
        );
    }

    let bytes = encode_coin(&quantize(&net, Precision::Half), dims)?;
    println!("header: {:02x?}", &bytes[..24]);
    Ok(())
}
