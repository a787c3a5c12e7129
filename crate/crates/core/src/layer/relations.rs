use super::PointCloud;
use crate::numeric::Matrix;
use crate::spatial::NeighborTable;
use crate::{Error, Real, Result};

/// Width of one relation row: `S` offsets, one distance, `D` features.
pub fn relation_width(spatial_dims: usize, feature_dims: usize) -> usize {
    spatial_dims + 1 + feature_dims
}

/// Relation rows for every (query, neighbour) pair, query-major.
///
/// Row `q · K + j` holds `coords_j − coords_q`, then `‖coords_j − coords_q‖`,
/// then the neighbour's features unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationTensor<T> {
    queries: usize,
    k: usize,
    spatial_dims: usize,
    feature_dims: usize,
    rows: Matrix<T>,
}

impl<T: Real> RelationTensor<T> {
    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        relation_width(self.spatial_dims, self.feature_dims)
    }

    pub fn relation(&self, query: usize, neighbor: usize) -> &[T] {
        self.rows.row(query * self.k + neighbor)
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.rows
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.rows
    }
}

/// Builds relation rows from `cloud` for queries at `query_coords` (flat,
/// `S` per query) whose neighbours are listed in `table`.
pub fn extract_relations<T: Real>(
    cloud: &PointCloud<T>,
    query_coords: &[T],
    table: &NeighborTable,
) -> Result<RelationTensor<T>> {
    let s = cloud.spatial_dims();
    let d = cloud.feature_dims();
    if query_coords.len() != table.query_count() * s {
        return Err(Error::shape(format!(
            "{} query coordinates for {} queries of dimension {s}",
            query_coords.len(),
            table.query_count()
        )));
    }
    if let Some(&bad) = table.all_indices().iter().find(|&&i| i >= cloud.len()) {
        return Err(Error::shape(format!("neighbour index {bad} outside cloud of {} points", cloud.len())));
    }
    let k = table.k();
    let width = relation_width(s, d);
    let mut data = Vec::with_capacity(table.query_count() * k * width);
    for (q, origin) in query_coords.chunks_exact(s).enumerate() {
        for &j in table.indices(q) {
            push_relation(&mut data, origin, cloud.coords(j), cloud.features(j));
        }
    }
    let rows = Matrix::from_vec(table.query_count() * k, width, data)?;
    Ok(RelationTensor { queries: table.query_count(), k, spatial_dims: s, feature_dims: d, rows })
}

#[inline]
pub(crate) fn push_relation<T: Real>(out: &mut Vec<T>, origin: &[T], coords: &[T], features: &[T]) {
    let mut d2 = T::zero();
    for (&c, &o) in coords.iter().zip(origin) {
        let delta = c - o;
        d2 += delta * delta;
        out.push(delta);
    }
    out.push(d2.sqrt());
    out.extend_from_slice(features);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::KdTree;

    #[test]
    fn three_four_five() {
        let cloud = PointCloud::<f64>::new(2, 1, vec![3.0, 4.0, 7.0]).unwrap();
        let table = KdTree::build(&cloud.coords_f64(), 2).unwrap().knn_query(&[0.0, 0.0], 1).unwrap();
        let rel = extract_relations(&cloud, &[0.0, 0.0], &table).unwrap();
        assert_eq!(rel.relation(0, 0), &[3.0, 4.0, 5.0, 7.0]);
    }

    #[test]
    fn self_relation() {
        let cloud = PointCloud::<f64>::new(3, 2, vec![1.0, 2.0, 3.0, -1.0, 0.5]).unwrap();
        let table = KdTree::build(&cloud.coords_f64(), 3).unwrap().knn_query(&[1.0, 2.0, 3.0], 1).unwrap();
        let rel = extract_relations(&cloud, cloud.coords(0), &table).unwrap();
        assert_eq!(rel.relation(0, 0), &[0.0, 0.0, 0.0, 0.0, -1.0, 0.5]);
    }

    #[test]
    fn mismatched_table() {
        let big = PointCloud::<f64>::from_coords(2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
        let table = KdTree::build(&big.coords_f64(), 2).unwrap().knn_query(&[0.0, 0.0], 3).unwrap();
        let small = PointCloud::<f64>::from_coords(2, vec![0.0, 0.0]).unwrap();
        assert!(extract_relations(&small, &[0.0, 0.0], &table).is_err());
        assert!(extract_relations(&big, &[0.0], &table).is_err());
    }
}
