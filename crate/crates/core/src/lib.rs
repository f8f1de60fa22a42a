//! Lossy image compression by overfitting a small sine-activated MLP to an
//! image's pixels and storing its quantized weights.
//!
//! The pipeline: [`encoder::encode`] fits a [`siren::SirenNetwork`] that maps
//! normalized `(x, y)` coordinates to RGB, [`quantize::quantize`] rounds its
//! parameters to half precision, and [`container::encode_coin`] writes them
//! behind a 24-byte header. [`decoder::decode`] evaluates the network on the
//! pixel grid again; [`decoder::decode_progressive`] samples it at other
//! densities or over a sub-region.
//!
//! Runnable examples live in `examples/`:
//!
//! - `fit_image`: encode a PNG and report PSNR per evaluation
//! - `quantize_and_store`: fp32 vs fp16 fidelity and the `.coin` bytes
//! - `progressive_decode`: thumbnail, region and upsampled renders
//! - `architecture_search`: candidates for a bpp budget and a small sweep
//! - `rate_distortion`: the benchmark harness over a directory
//! - `gradient_check`: analytic gradients against finite differences
//! - `resume_encode`: checkpoint an encode and continue it later

pub mod arch_search;
pub mod bench;
pub mod cli;
pub mod container;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod image_plane;
pub mod optim;
pub mod quantize;
pub mod siren;
mod wire;

pub use container::{decode_coin, encode_coin, read_coin, write_coin, ImageDims};
pub use decoder::{decode, decode_progressive};
pub use encoder::{encode, Encoder, RunMetrics, TrainConfig};
pub use error::{CoinError, Result};
pub use image_plane::{load_image, psnr, save_image, ImagePlane, Region};
pub use quantize::{dequantize, quantize, Precision, QuantizedModel};
pub use siren::{Architecture, SirenNetwork};
