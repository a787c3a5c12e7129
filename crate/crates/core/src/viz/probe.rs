//! Unit-sample probing of a continuous filter.
//!
//! The filter is evaluated on a regular grid of offsets in
//! `[-extent, extent]^S`: the offset goes into the spatial inputs, its norm
//! into the distance input, and every feature input is held at 1. The raw
//! filter output (before the neighbour sum and activation) is recorded.

use crate::numeric::{FilterNetwork, Matrix};
use crate::{Error, Real, Result};

/// Slices rendered for a 3D filter when none are requested.
pub const DEFAULT_SLICES: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterImage {
    pub width: usize,
    pub height: usize,
    /// z of each slice; a single `0.0` for 2D filters.
    pub slice_z: Vec<f64>,
    pub channel: usize,
    pub extent: f64,
    /// Slice-major, then row-major; row 0 is `y = +extent`.
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl FilterImage {
    pub fn slices(&self) -> usize {
        self.slice_z.len()
    }

    pub fn get(&self, slice: usize, row: usize, col: usize) -> f64 {
        self.values[(slice * self.height + row) * self.width + col]
    }

    /// Offset probed at grid column `col` (or row, via [`FilterImage::row_y`]).
    pub fn col_x(&self, col: usize) -> f64 {
        grid_coord(col, self.width, self.extent)
    }

    pub fn row_y(&self, row: usize) -> f64 {
        -grid_coord(row, self.height, self.extent)
    }
}

fn grid_coord(i: usize, n: usize, extent: f64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let span = (n - 1) as f64;
    extent * (2.0 * i as f64 - span) / span
}

fn evenly_spaced(n: usize, extent: f64) -> Vec<f64> {
    (0..n).map(|i| grid_coord(i, n, extent)).collect()
}

/// Probes output `channel` of `filter` on a `resolution × resolution` grid.
/// For 3D filters the grid is repeated at each z in `slice_z`, defaulting
/// to [`DEFAULT_SLICES`] evenly spaced levels.
pub fn probe_filter<T: Real>(
    filter: &FilterNetwork<T>,
    spatial_dims: usize,
    channel: usize,
    extent: f64,
    resolution: usize,
    slice_z: Option<&[f64]>,
) -> Result<FilterImage> {
    if channel >= filter.output_width() {
        return Err(Error::InvalidArgument(format!("channel {channel} out of range (filter has {})", filter.output_width())));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!("extent {extent} must be positive")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be at least 1".into()));
    }
    if !(2..=3).contains(&spatial_dims) || filter.input_width() <= spatial_dims {
        return Err(Error::shape(format!("filter of width {} cannot take {spatial_dims}-D relations", filter.input_width())));
    }
    let features = filter.input_width() - spatial_dims - 1;
    let slice_z = match (spatial_dims, slice_z) {
        (2, _) => vec![0.0],
        (_, Some(z)) if !z.is_empty() => z.to_vec(),
        _ => evenly_spaced(DEFAULT_SLICES, extent),
    };
    let axis = evenly_spaced(resolution, extent);
    let probes = slice_z.len() * resolution * resolution;
    let width = filter.input_width();
    let mut rows = Vec::with_capacity(probes * width);
    for &z in &slice_z {
        for row in 0..resolution {
            let y = axis[resolution - 1 - row];
            for &x in &axis {
                let delta: &[f64] = if spatial_dims == 2 { &[x, y] } else { &[x, y, z] };
                let dist = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                rows.extend(delta.iter().map(|&d| T::of(d)));
                rows.push(T::of(dist));
                rows.extend(std::iter::repeat_n(T::one(), features));
            }
        }
    }
    let out = filter.eval_batch(&Matrix::from_vec(probes, width, rows)?)?;
    let values: Vec<f64> = (0..probes).map(|p| out.get(p, channel).as_f64()).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("filter response is not finite".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FilterImage { width: resolution, height: resolution, slice_z, channel, extent, values, min, max })
}
