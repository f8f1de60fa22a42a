//! The `.coin` bitstream.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "COIN"
//!      4     1  format version (1)
//!      5     1  precision bits (16 or 32)
//!      6     2  hidden layers          u16
//!      8     2  hidden width           u16
//!     10     4  freq scale ω₀          f32
//!     14     4  image width            u32
//!     18     4  image height           u32
//!     22     2  reserved, zero
//!     24     …  param_count scalars at `precision` bits, storage order
//! ```
//!
//! Everything is little-endian. There is no entropy coding: the file is the
//! header plus the raw quantized parameters. Coordinates are normalized with
//! the endpoint-inclusive convention `x = 2i/(width − 1) − 1`.

use std::fs;
use std::path::Path;

use half::f16;

use crate::error::{CoinError, Result};
use crate::quantize::{Payload, Precision, QuantizedModel};
use crate::siren::Architecture;
use crate::wire::{Reader, Writer};

pub const MAGIC: [u8; 4] = *b"COIN";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;

/// Dimensions of the encoded image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageDims {
    pub width: usize,
    pub height: usize,
}

impl ImageDims {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Exact byte length of a `.coin` file holding `q`.
pub fn file_len(arch: Architecture, precision: Precision) -> usize {
    HEADER_LEN + arch.param_count() * precision.bytes_per_param()
}

pub fn encode_coin(q: &QuantizedModel, dims: ImageDims) -> Result<Vec<u8>> {
    let arch = q.arch;
    if q.payload.len() != arch.param_count() {
        return Err(CoinError::ShapeMismatch {
            what: "payload",
            expected: arch.param_count(),
            actual: q.payload.len(),
        });
    }
    let (width, height) = match (u32::try_from(dims.width), u32::try_from(dims.height)) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => (w, h),
        _ => {
            return Err(CoinError::InvalidConfig(format!(
                "image dimensions {}x{} not representable",
                dims.width, dims.height
            )))
        }
    };

    let mut w = Writer::with_capacity(file_len(arch, q.precision()));
    w.bytes(&MAGIC);
    w.u8(FORMAT_VERSION);
    w.u8(q.precision().bits());
    w.u16(arch.hidden_layers() as u16);
    w.u16(arch.width() as u16);
    w.f32(arch.freq_scale());
    w.u32(width);
    w.u32(height);
    w.u16(0);
    match &q.payload {
        Payload::Half(values) => values.iter().for_each(|h| w.u16(h.to_bits())),
        Payload::Single(values) => values.iter().for_each(|&s| w.f32(s)),
    }
    Ok(w.into_bytes())
}

pub fn decode_coin(bytes: &[u8]) -> Result<(QuantizedModel, ImageDims)> {
    if bytes.len() < HEADER_LEN {
        // Still report a bad magic when the prefix is visibly wrong.
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(CoinError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(CoinError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(CoinError::BadMagic(magic));
    }
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(CoinError::UnsupportedVersion(version));
    }
    let precision = Precision::from_bits(r.u8()?)?;
    let hidden_layers = r.u16()?;
    let width = r.u16()?;
    let freq_scale = r.f32()?;
    let image_width = r.u32()?;
    let image_height = r.u32()?;
    let reserved = r.u16()?;
    if reserved != 0 {
        return Err(CoinError::InvalidHeader(format!(
            "reserved field is {reserved:#06x}, expected 0"
        )));
    }
    if image_width == 0 || image_height == 0 {
        return Err(CoinError::InvalidHeader(format!(
            "image dimensions {image_width}x{image_height}"
        )));
    }
    let arch = Architecture::new(hidden_layers as usize, width as usize, freq_scale)
        .map_err(|e| CoinError::InvalidHeader(e.to_string()))?;

    let expected = file_len(arch, precision);
    if bytes.len() < expected {
        return Err(CoinError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CoinError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }

    let n = arch.param_count();
    let payload = match precision {
        Precision::Half => Payload::Half(
            (0..n)
                .map(|_| r.u16().map(f16::from_bits))
                .collect::<Result<_>>()?,
        ),
        Precision::Single => Payload::Single((0..n).map(|_| r.f32()).collect::<Result<_>>()?),
    };
    Ok((
        QuantizedModel { arch, payload },
        ImageDims::new(image_width as usize, image_height as usize),
    ))
}

pub fn write_coin(q: &QuantizedModel, dims: ImageDims, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_coin(q, dims)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_coin(path: impl AsRef<Path>) -> Result<(QuantizedModel, ImageDims)> {
    decode_coin(&fs::read(path)?)
}
