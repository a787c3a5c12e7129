//! Median-split KD-tree with points stored in leaf buckets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{clamp_k, squared_distance, validate_coords, NeighborTable};
use crate::{Error, Result};

pub const DEFAULT_LEAF_CAPACITY: usize = 16;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    /// `order[start..end]` belong to this leaf.
    Leaf { start: u32, end: u32 },
    /// Left subtree has coordinate ≤ `value` along `dim`, right subtree ≥.
    Split { dim: u8, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    leaf_capacity: usize,
    /// Point coordinates, laid out in leaf order.
    coords: Vec<f64>,
    /// Original index of each point in `coords`.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

struct Best {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl Best {
    #[inline]
    fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if c < *top {
                *top = c;
            }
        }
    }

    #[inline]
    fn admits(&self, lower_bound: f64) -> bool {
        // Equal distances must still be visited: a smaller index may win the tie.
        self.heap.len() < self.k || self.heap.peek().is_some_and(|top| lower_bound <= top.d2)
    }
}

impl KdTree {
    pub fn build(points: &[f64], dim: usize) -> Result<Self> {
        Self::build_with_leaf_capacity(points, dim, DEFAULT_LEAF_CAPACITY)
    }

    pub fn build_with_leaf_capacity(points: &[f64], dim: usize, leaf_capacity: usize) -> Result<Self> {
        let n = validate_coords(points, dim, "points")?;
        if n == 0 {
            return Err(Error::EmptyInput("cannot build a KD-tree over zero points".into()));
        }
        if leaf_capacity == 0 {
            return Err(Error::InvalidArgument("leaf capacity must be at least 1".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!("{n} points exceed the index range")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n / leaf_capacity + 1);
        build_node(points, dim, leaf_capacity, &mut order, 0, &mut nodes);
        let mut coords = Vec::with_capacity(points.len());
        for &i in &order {
            coords.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        Ok(KdTree { dim, leaf_capacity, coords, order, nodes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Point indices in left-to-right leaf order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => out.extend_from_slice(&self.order[start as usize..end as usize]),
            Node::Split { left, right, .. } => {
                self.collect_leaves(left as usize, out);
                self.collect_leaves(right as usize, out);
            }
        }
    }

    /// Checks the split invariant of every internal node; used by tests.
    pub fn check_invariants(&self) -> bool {
        self.check_node(0)
    }

    fn check_node(&self, node: usize) -> bool {
        match self.nodes[node] {
            Node::Leaf { start, end } => start < end || self.is_empty(),
            Node::Split { dim, value, left, right } => {
                let mut l = Vec::new();
                self.collect_leaves(left as usize, &mut l);
                let mut r = Vec::new();
                self.collect_leaves(right as usize, &mut r);
                let coord = |i: usize| {
                    let pos = self.order.iter().position(|&o| o == i).unwrap();
                    self.coords[pos * self.dim + dim as usize]
                };
                l.iter().all(|&i| coord(i) <= value)
                    && r.iter().all(|&i| coord(i) >= value)
                    && self.check_node(left as usize)
                    && self.check_node(right as usize)
            }
        }
    }

    /// The `k` nearest stored points to `query` as `(index, squared distance)`,
    /// nearest first. `k` is clamped to the number of points.
    pub fn knn(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.dim {
            return Err(Error::shape(format!("query has {} coordinates, tree has {}", query.len(), self.dim)));
        }
        let k = clamp_k(k, self.len())?;
        Ok(self.search(query, k))
    }

    fn search(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut best = Best { k, heap: BinaryHeap::with_capacity(k + 1) };
        let mut off = [0.0_f64; MAX_DIM];
        self.visit(0, query, &mut off, &mut best);
        best.heap.into_sorted_vec().into_iter().map(|c| (c.index, c.d2)).collect()
    }

    fn visit(&self, node: usize, q: &[f64], off: &mut [f64; MAX_DIM], best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                    best.offer(Candidate { d2: squared_distance(q, p), index: self.order[slot] });
                }
            }
            Node::Split { dim, value, left, right } => {
                let d = dim as usize;
                let diff = q[d] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.visit(near as usize, q, off, best);
                let saved = off[d];
                off[d] = diff;
                // Per-axis gaps summed in axis order never exceed the rounded
                // squared distance of any point across the plane.
                let mut lower = 0.0;
                for o in &off[..self.dim] {
                    lower += o * o;
                }
                if best.admits(lower) {
                    self.visit(far as usize, q, off, best);
                }
                off[d] = saved;
            }
        }
    }

    /// Exact KNN for a flat list of query coordinates.
    pub fn knn_query(&self, queries: &[f64], k: usize) -> Result<NeighborTable> {
        let q = validate_coords(queries, self.dim, "queries")?;
        let k = clamp_k(k, self.len())?;
        let mut table = NeighborTable::with_capacity(q, k);
        for query in queries.chunks_exact(self.dim) {
            table.push_row(self.search(query, k));
        }
        Ok(table)
    }
}

fn build_node(
    points: &[f64],
    dim: usize,
    leaf_capacity: usize,
    order: &mut [usize],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let id = nodes.len() as u32;
    let n = order.len();
    if n <= leaf_capacity {
        nodes.push(Node::Leaf { start: offset as u32, end: (offset + n) as u32 });
        return id;
    }
    let coord = |i: usize, d: usize| points[i * dim + d];
    // Split along the widest axis; ties go to the lower axis.
    let mut split_dim = 0;
    let mut widest = f64::NEG_INFINITY;
    for d in 0..dim {
        let (lo, hi) = order.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(coord(i, d)), hi.max(coord(i, d)))
        });
        if hi - lo > widest {
            widest = hi - lo;
            split_dim = d;
        }
    }
    let mid = n / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        coord(a, split_dim).total_cmp(&coord(b, split_dim)).then(a.cmp(&b))
    });
    let value = coord(order[mid], split_dim);
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(points, dim, leaf_capacity, lo, offset, nodes);
    let right = build_node(points, dim, leaf_capacity, hi, offset + mid, nodes);
    nodes[id as usize] = Node::Split { dim: split_dim as u8, value, left, right };
    id
}
