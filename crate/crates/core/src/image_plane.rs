//! RGB images on the `[0, 1]` scale, coordinate grids and PSNR.
//!
//! Pixel `(i, j)` of a `width × height` image sits at
//! `x = 2i/(width − 1) − 1`, `y = 2j/(height − 1) − 1`, so the corner pixels
//! land exactly on ±1. A dimension of length 1 maps to coordinate 0. Every
//! grid built here (full, scaled, cropped) samples this same normalization,
//! which keeps region decodes pixel-exact against full decodes.

use std::path::Path;

use image::RgbImage;

use crate::error::{CoinError, Result};
use crate::siren::{Coord, Rgb};

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl ImagePlane {
    /// Builds a plane from row-major, channel-interleaved RGB values.
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CoinError::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(CoinError::ShapeMismatch {
                what: "pixel buffer",
                expected,
                actual: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CoinError::InvalidImage(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        let pixels = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, pixels)
    }

    /// Clamps raw network outputs into `[0, 1]`.
    pub fn from_outputs(width: usize, height: usize, outputs: &[Rgb]) -> Result<Self> {
        let pixels = outputs
            .iter()
            .flatten()
            .map(|&v| v.clamp(0.0, 1.0) as f32)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn from_rgb8(img: &RgbImage) -> Result<Self> {
        let pixels = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Self::new(img.width() as usize, img.height() as usize, pixels)
    }

    /// Quantizes to 8 bits per channel (round to nearest level).
    pub fn to_rgb8(&self) -> RgbImage {
        let raw = self
            .pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Pixels as `f64` training targets, row-major.
    pub fn targets(&self) -> Vec<Rgb> {
        self.pixels
            .chunks_exact(3)
            .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
            .collect()
    }

    pub fn mean_color(&self) -> [f32; 3] {
        let mut sum = [0.0f64; 3];
        for c in self.pixels.chunks_exact(3) {
            for k in 0..3 {
                sum[k] += c[k] as f64;
            }
        }
        let n = self.pixel_count() as f64;
        sum.map(|s| (s / n) as f32)
    }

    pub fn crop(&self, region: Region) -> Result<Self> {
        region.check_within(self.width, self.height)?;
        let mut pixels = Vec::with_capacity(region.width * region.height * 3);
        for y in region.y..region.y + region.height {
            let start = (y * self.width + region.x) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + region.width * 3]);
        }
        Self::new(region.width, region.height, pixels)
    }
}

/// Loads an 8-bit raster file; values map to `[0, 1]` by `v / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let img = image::open(path.as_ref())?.to_rgb8();
    ImagePlane::from_rgb8(&img)
}

/// Saves as 8-bit RGB; the format follows the file extension.
pub fn save_image(plane: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    plane.to_rgb8().save(path.as_ref())?;
    Ok(())
}

/// Pixel rectangle `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    pub fn whole(width: usize, height: usize) -> Self {
        Self::new(0, 0, width, height)
    }

    fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(CoinError::EmptyRegion);
        }
        let fits_x = self.x.checked_add(self.width).is_some_and(|e| e <= width);
        let fits_y = self.y.checked_add(self.height).is_some_and(|e| e <= height);
        if !(fits_x && fits_y) {
            return Err(CoinError::RegionOutOfBounds {
                region: (self.x, self.y, self.width, self.height),
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Row-major list of sample coordinates in `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordGrid {
    pub coords: Vec<Coord>,
    /// Dimensions of the sampled grid.
    pub width: usize,
    pub height: usize,
    /// Image dimensions the normalization was derived from.
    pub source_width: usize,
    pub source_height: usize,
}

impl CoordGrid {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Maps a (possibly fractional) pixel position onto `[-1, 1]`.
#[inline]
fn normalize(pos: f64, extent: usize) -> f64 {
    if extent <= 1 {
        0.0
    } else {
        2.0 * pos / (extent - 1) as f64 - 1.0
    }
}

fn grid_from_axes(xs: &[f64], ys: &[f64], source: (usize, usize)) -> CoordGrid {
    let coords = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
        .collect();
    CoordGrid {
        coords,
        width: xs.len(),
        height: ys.len(),
        source_width: source.0,
        source_height: source.1,
    }
}

/// One coordinate per pixel of a `width × height` image.
pub fn full_grid(width: usize, height: usize) -> CoordGrid {
    let xs: Vec<f64> = (0..width).map(|i| normalize(i as f64, width)).collect();
    let ys: Vec<f64> = (0..height).map(|j| normalize(j as f64, height)).collect();
    grid_from_axes(&xs, &ys, (width, height))
}

/// Samples `region` (default: the whole image) of a `width × height` image
/// at `scale` times its pixel density.
///
/// The region's first and last pixel centres are always sampled; the output
/// has `round(extent · scale)` samples per axis (at least one). At scale 1
/// the coordinates are bit-identical to the matching [`full_grid`] entries.
pub fn subgrid(width: usize, height: usize, scale: f64, region: Option<Region>) -> Result<CoordGrid> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CoinError::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let region = region.unwrap_or(Region::whole(width, height));
    region.check_within(width, height)?;

    let axis = |start: usize, len: usize, extent: usize| -> Vec<f64> {
        let n = scaled_len(len, scale);
        (0..n)
            .map(|k| {
                let pos = if n == 1 {
                    start as f64 + (len - 1) as f64 / 2.0
                } else {
                    start as f64 + (k as f64 * (len - 1) as f64) / (n - 1) as f64
                };
                normalize(pos, extent)
            })
            .collect()
    };
    let xs = axis(region.x, region.width, width);
    let ys = axis(region.y, region.height, height);
    Ok(grid_from_axes(&xs, &ys, (width, height)))
}

/// Output length of an axis of `len` pixels decoded at `scale`.
pub fn scaled_len(len: usize, scale: f64) -> usize {
    ((len as f64 * scale).round() as usize).max(1)
}

/// Mean squared error over every channel value.
pub fn mse(reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
    if reference.dims() != test.dims() {
        return Err(CoinError::DimensionMismatch {
            left: reference.dims(),
            right: test.dims(),
        });
    }
    let sum: f64 = reference
        .pixels
        .iter()
        .zip(&test.pixels)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / reference.pixels.len() as f64)
}

/// `10·log10(1 / mse)`; `+∞` when the images are identical.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// Peak signal-to-noise ratio in dB with peak value 1.
pub fn psnr(reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
    mse(reference, test).map(psnr_from_mse)
}
