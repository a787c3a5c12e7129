//! Exact k-nearest-neighbour search.
//!
//! Neighbours are ranked by `(squared distance, index)` so ties resolve to the
//! smaller candidate index. The KD-tree and the brute-force scan compute the
//! squared distance with the same arithmetic, which makes their results
//! comparable bit for bit.

mod brute;
mod kdtree;
mod table;

pub use brute::brute_force_knn;
pub use kdtree::{KdTree, DEFAULT_LEAF_CAPACITY, MAX_DIM};
pub use table::NeighborTable;

use crate::{Error, Result};

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

pub(crate) fn validate_coords(coords: &[f64], dim: usize, what: &str) -> Result<usize> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..={MAX_DIM}")));
    }
    if coords.len() % dim != 0 {
        return Err(Error::shape(format!("{what}: {} values is not a multiple of dimension {dim}", coords.len())));
    }
    if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: non-finite coordinate in point {}", i / dim)));
    }
    Ok(coords.len() / dim)
}

pub(crate) fn clamp_k(k: usize, n: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k > n {
        log::debug!("clamping K={k} to point count {n}");
    }
    Ok(k.min(n))
}
