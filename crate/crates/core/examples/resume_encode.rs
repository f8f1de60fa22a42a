//! Stop an encode part-way, save a checkpoint, and finish it from disk.
//! The resumed run ends bit-identical to an uninterrupted one.
//!
//! ```bash
//! cargo run --release -p coin --example resume_encode
//! ```

use std::path::PathBuf;

use coin::encoder::Checkpoint;
use coin::{encode, load_image, Architecture, Encoder, TrainConfig};

fn main() -> coin::Result<()> {
    let image = load_image(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chelsea_64.png"))?;
    let arch = Architecture::with_default_freq(3, 12)?;
    let cfg = TrainConfig {
        iterations: 300,
        log_every: 25,
        ..TrainConfig::default()
    };

    let mut first = Encoder::new(&image, arch, cfg)?;
    first.run_steps(120)?;
    let path = std::env::temp_dir().join("coin-resume.ckpt");
    first.checkpoint().write(&path)?;
    println!("checkpoint at iteration {} -> {}", first.iteration(), path.display());
    drop(first);

    let mut resumed = Encoder::resume(&image, Checkpoint::read(&path)?, cfg)?;
    resumed.run()?;
    let (net, metrics) = resumed.finish();

    let (reference, _) = encode(&image, arch, cfg)?;
    println!("best {:.3} dB at iteration {}", metrics.best_psnr, metrics.best_iteration);
    println!("identical to uninterrupted run: {}", net == reference);
    std::fs::remove_file(path)?;
    Ok(())
}
