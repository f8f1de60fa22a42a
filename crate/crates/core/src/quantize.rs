//! Post-training weight quantization and the bits-per-pixel formula.
//!
//! 16-bit storage is IEEE 754 binary16 with round-half-to-even; magnitudes
//! beyond the largest finite half value saturate instead of overflowing to
//! infinity. 32-bit storage is a pass-through of the `f32` parameters.

use half::f16;

use crate::error::{CoinError, Result};
use crate::siren::{Architecture, SirenNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Half,
    Single,
}

impl Precision {
    pub fn bits(self) -> u8 {
        match self {
            Precision::Half => 16,
            Precision::Single => 32,
        }
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        match bits {
            16 => Ok(Precision::Half),
            32 => Ok(Precision::Single),
            other => Err(CoinError::UnsupportedPrecision(other)),
        }
    }

    pub fn bytes_per_param(self) -> usize {
        self.bits() as usize / 8
    }
}

/// Stored scalars in storage order.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Half(Vec<f16>),
    Single(Vec<f32>),
}

impl Payload {
    pub fn precision(&self) -> Precision {
        match self {
            Payload::Half(_) => Precision::Half,
            Payload::Single(_) => Precision::Single,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::Half(v) => v.len(),
            Payload::Single(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact widening of every stored value.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Payload::Half(v) => v.iter().map(|h| h.to_f64()).collect(),
            Payload::Single(v) => v.iter().map(|&s| s as f64).collect(),
        }
    }
}

/// The transmitted code: architecture plus quantized parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub arch: Architecture,
    pub payload: Payload,
}

impl QuantizedModel {
    pub fn precision(&self) -> Precision {
        self.payload.precision()
    }
}

/// Nearest binary16 value (ties to even), saturating at ±65504.
pub fn to_half(v: f64) -> f16 {
    let h = f16::from_f64(v);
    if h.is_infinite() {
        if h.is_sign_negative() {
            -f16::MAX
        } else {
            f16::MAX
        }
    } else {
        h
    }
}

pub fn quantize(net: &SirenNetwork, precision: Precision) -> QuantizedModel {
    let params = net.params();
    let payload = match precision {
        Precision::Half => Payload::Half(params.iter().map(|&p| to_half(p)).collect()),
        Precision::Single => Payload::Single(params.iter().map(|&p| p as f32).collect()),
    };
    QuantizedModel {
        arch: net.architecture(),
        payload,
    }
}

pub fn dequantize(q: &QuantizedModel) -> Result<SirenNetwork> {
    SirenNetwork::from_params(q.arch, q.payload.to_f64())
}

/// `param_count × bits_per_param / pixel_count`.
pub fn bpp(arch: Architecture, precision: Precision, width: usize, height: usize) -> f64 {
    (arch.param_count() * precision.bits() as usize) as f64 / (width * height) as f64
}
