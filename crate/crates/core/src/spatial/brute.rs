use super::{clamp_k, squared_distance, validate_coords, NeighborTable};
use crate::Result;

/// Scans every candidate for every query and sorts by `(distance, index)`.
pub fn brute_force_knn(points: &[f64], queries: &[f64], dim: usize, k: usize) -> Result<NeighborTable> {
    let n = validate_coords(points, dim, "points")?;
    let q = validate_coords(queries, dim, "queries")?;
    if n == 0 {
        return Err(crate::Error::EmptyInput("no candidate points".into()));
    }
    let k = clamp_k(k, n)?;
    let mut table = NeighborTable::with_capacity(q, k);
    let mut all: Vec<(f64, usize)> = Vec::with_capacity(n);
    for query in queries.chunks_exact(dim) {
        all.clear();
        all.extend(points.chunks_exact(dim).enumerate().map(|(i, p)| (squared_distance(query, p), i)));
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        table.push_row(all[..k].iter().map(|&(d2, i)| (i, d2)));
    }
    Ok(table)
}
