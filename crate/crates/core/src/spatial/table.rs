/// K neighbours per query, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    query_count: usize,
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub(crate) fn with_capacity(query_count: usize, k: usize) -> Self {
        NeighborTable {
            query_count: 0,
            k,
            indices: Vec::with_capacity(query_count * k),
            distances: Vec::with_capacity(query_count * k),
        }
    }

    pub(crate) fn push_row(&mut self, row: impl IntoIterator<Item = (usize, f64)>) {
        let before = self.indices.len();
        for (idx, d2) in row {
            self.indices.push(idx);
            self.distances.push(d2.sqrt());
        }
        debug_assert_eq!(self.indices.len() - before, self.k);
        self.query_count += 1;
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.query_count == 0
    }

    pub fn indices(&self, query: usize) -> &[usize] {
        &self.indices[query * self.k..(query + 1) * self.k]
    }

    pub fn distances(&self, query: usize) -> &[f64] {
        &self.distances[query * self.k..(query + 1) * self.k]
    }

    pub fn all_indices(&self) -> &[usize] {
        &self.indices
    }
}
