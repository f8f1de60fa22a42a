//! Reconstruction by evaluating the network on a coordinate grid.

use crate::container::ImageDims;
use crate::error::Result;
use crate::image_plane::{full_grid, subgrid, CoordGrid, ImagePlane, Region};
use crate::quantize::{dequantize, QuantizedModel};
use crate::siren::SirenNetwork;

/// Evaluates `net` on every coordinate of `grid`, clamping to `[0, 1]`.
pub fn render(net: &SirenNetwork, grid: &CoordGrid) -> ImagePlane {
    let outputs = net.forward(&grid.coords);
    ImagePlane::from_outputs(grid.width, grid.height, &outputs)
        .expect("grid dimensions are positive and outputs are clamped")
}

/// Full-resolution reconstruction at `dims`.
pub fn decode(q: &QuantizedModel, dims: ImageDims) -> Result<ImagePlane> {
    let net = dequantize(q)?;
    Ok(render(&net, &full_grid(dims.width, dims.height)))
}

/// Reconstruction at `scale` times the native density, optionally limited
/// to a pixel `region` of the native image. `dims` are the native (header)
/// dimensions, which fix the coordinate normalization.
pub fn decode_progressive(
    q: &QuantizedModel,
    dims: ImageDims,
    scale: f64,
    region: Option<Region>,
) -> Result<ImagePlane> {
    let grid = subgrid(dims.width, dims.height, scale, region)?;
    let net = dequantize(q)?;
    Ok(render(&net, &grid))
}
