use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CoinError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CoinError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what}: expected length {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("image dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region {region:?} exceeds image bounds {width}x{height}")]
    RegionOutOfBounds {
        region: (usize, usize, usize, usize),
        width: usize,
        height: usize,
    },

    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Diverged { iteration: u64, loss: f64 },

    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("unsupported precision: {0} bits")]
    UnsupportedPrecision(u8),

    #[error("truncated data: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("header/payload length mismatch: header implies {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("checkpoint fingerprint {found:016x} does not match run fingerprint {expected:016x}")]
    ConfigMismatch { expected: u64, found: u64 },

    #[error("unknown bpp preset {0}")]
    UnknownPreset(f64),

    #[error("no images found in {0}")]
    EmptyCorpus(PathBuf),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
