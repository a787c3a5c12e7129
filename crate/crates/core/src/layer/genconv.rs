//! The strided generalized convolution layer.
//!
//! For each sampled query `i` with neighbours `N(i)`:
//! `z_i = Σ_{j ∈ N(i)} f(relation_ij)`, `a_i = σ(z_i)`, and the output point
//! is `(coords_i, a_i)`. Sums run neighbour-minor in nearest-first order.

use rand::Rng;

use super::relations::{extract_relations, relation_width};
use super::{stride_sample, PointCloud};
use crate::numeric::{Activation, BatchTrace, FilterNetwork, Matrix, NetworkGrads, ParameterCount};
use crate::spatial::{KdTree, NeighborTable};
use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct GenConvLayer<T> {
    filter: FilterNetwork<T>,
    k: usize,
    stride_fraction: f64,
    activation: Activation,
    spatial_dims: usize,
    cache: Option<LayerTrace<T>>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    input_len: usize,
    input_features: usize,
    queries: Vec<usize>,
    table: NeighborTable,
    filter: BatchTrace<T>,
    pre_activation: Matrix<T>,
}

impl<T> LayerTrace<T> {
    pub fn queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.table
    }
}

impl<T: Real> PartialEq for GenConvLayer<T> {
    fn eq(&self, other: &Self) -> bool {
        self.filter == other.filter
            && self.k == other.k
            && self.stride_fraction == other.stride_fraction
            && self.activation == other.activation
            && self.spatial_dims == other.spatial_dims
    }
}

impl<T: Real> GenConvLayer<T> {
    pub fn new(
        filter: FilterNetwork<T>,
        spatial_dims: usize,
        k: usize,
        stride_fraction: f64,
        activation: Activation,
    ) -> Result<Self> {
        if !(2..=3).contains(&spatial_dims) {
            return Err(Error::InvalidArgument(format!("spatial dimension {spatial_dims} must be 2 or 3")));
        }
        if filter.input_width() <= spatial_dims {
            return Err(Error::shape(format!(
                "filter input width {} cannot hold {spatial_dims} offsets plus a distance",
                filter.input_width()
            )));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(stride_fraction > 0.0 && stride_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("stride fraction {stride_fraction} outside (0, 1]")));
        }
        activation.validate()?;
        Ok(GenConvLayer { filter, k, stride_fraction, activation, spatial_dims, cache: None })
    }

    pub fn filter(&self) -> &FilterNetwork<T> {
        &self.filter
    }

    pub fn filter_mut(&mut self) -> &mut FilterNetwork<T> {
        self.cache = None;
        &mut self.filter
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn set_k(&mut self, k: usize) {
        self.k = k.max(1);
    }

    pub fn stride_fraction(&self) -> f64 {
        self.stride_fraction
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn spatial_dims(&self) -> usize {
        self.spatial_dims
    }

    /// Feature channels expected on the incoming cloud.
    pub fn input_features(&self) -> usize {
        self.filter.input_width() - self.spatial_dims - 1
    }

    pub fn output_features(&self) -> usize {
        self.filter.output_width()
    }

    pub fn trace(&self) -> Option<&LayerTrace<T>> {
        self.cache.as_ref()
    }

    fn check_input(&self, cloud: &PointCloud<T>) -> Result<()> {
        if cloud.spatial_dims() != self.spatial_dims {
            return Err(Error::shape(format!(
                "layer is {}-D, cloud is {}-D",
                self.spatial_dims,
                cloud.spatial_dims()
            )));
        }
        if relation_width(cloud.spatial_dims(), cloud.feature_dims()) != self.filter.input_width() {
            return Err(Error::shape(format!(
                "layer expects {} feature channels, cloud has {}",
                self.input_features(),
                cloud.feature_dims()
            )));
        }
        Ok(())
    }

    /// Strided forward pass; the trace is kept for [`GenConvLayer::backward`].
    pub fn forward<R: Rng + ?Sized>(&mut self, cloud: &PointCloud<T>, rng: &mut R) -> Result<PointCloud<T>> {
        let queries = stride_sample(cloud.len(), self.stride_fraction, rng)?;
        self.forward_at(cloud, queries)
    }

    /// Forward pass at explicitly chosen query indices.
    pub fn forward_at(&mut self, cloud: &PointCloud<T>, queries: Vec<usize>) -> Result<PointCloud<T>> {
        let (out, trace) = self.run(cloud, queries)?;
        self.cache = Some(trace);
        Ok(out)
    }

    /// Forward pass that leaves the cached trace untouched.
    pub fn infer<R: Rng + ?Sized>(&self, cloud: &PointCloud<T>, rng: &mut R) -> Result<PointCloud<T>> {
        let queries = stride_sample(cloud.len(), self.stride_fraction, rng)?;
        Ok(self.run(cloud, queries)?.0)
    }

    pub fn run(&self, cloud: &PointCloud<T>, queries: Vec<usize>) -> Result<(PointCloud<T>, LayerTrace<T>)> {
        self.check_input(cloud)?;
        if queries.is_empty() {
            return Err(Error::EmptyInput("no query points".into()));
        }
        if let Some(&bad) = queries.iter().find(|&&q| q >= cloud.len()) {
            return Err(Error::shape(format!("query index {bad} outside cloud of {} points", cloud.len())));
        }
        let s = self.spatial_dims;
        let query_coords: Vec<T> = queries.iter().flat_map(|&q| cloud.coords(q).iter().copied()).collect();
        let tree = KdTree::build(&cloud.coords_f64(), s)?;
        let query_f64: Vec<f64> = query_coords.iter().map(|c| c.as_f64()).collect();
        let table = tree.knn_query(&query_f64, self.k)?;
        let relations = extract_relations(cloud, &query_coords, &table)?;
        let (responses, filter_trace) = self.filter.forward_batch(relations.as_matrix())?;
        let pre_activation = responses.sum_row_groups(table.k())?;
        let activations = pre_activation.map(|z| self.activation.apply(z));
        let out = PointCloud::from_activations(s, &query_coords, self.output_features(), activations.as_slice())?;
        let trace = LayerTrace {
            input_len: cloud.len(),
            input_features: cloud.feature_dims(),
            queries,
            table,
            filter: filter_trace,
            pre_activation,
        };
        Ok((out, trace))
    }

    /// Reverse pass for the cached forward.
    ///
    /// `upstream` is the gradient of the loss with respect to the output cloud
    /// (`N_q × (S + D′)`); its coordinate columns are ignored. Returns the
    /// filter parameter gradients and the gradient with respect to the input
    /// cloud (`N × (S + D)`) whose coordinate columns are zero.
    pub fn backward(&self, upstream: &Matrix<T>) -> Result<(NetworkGrads<T>, Matrix<T>)> {
        let trace = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("genconv backward called before forward".into()))?;
        let mut grads = NetworkGrads::zeros_like(&self.filter);
        let input_grad = self.backward_trace(trace, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Reverse pass for an explicit trace, accumulating into `grads`.
    pub fn backward_trace(
        &self,
        trace: &LayerTrace<T>,
        upstream: &Matrix<T>,
        grads: &mut NetworkGrads<T>,
    ) -> Result<Matrix<T>> {
        let s = self.spatial_dims;
        let nq = trace.queries.len();
        let d_out = self.output_features();
        if upstream.rows() != nq || upstream.cols() != s + d_out {
            return Err(Error::shape(format!(
                "upstream gradient {}x{} for output cloud {nq}x{}",
                upstream.rows(),
                upstream.cols(),
                s + d_out
            )));
        }
        let k = trace.table.k();
        let mut d_responses = Matrix::zeros(nq * k, d_out);
        for q in 0..nq {
            let z = trace.pre_activation.row(q);
            let da = &upstream.row(q)[s..];
            for n in 0..k {
                let dst = d_responses.row_mut(q * k + n);
                for c in 0..d_out {
                    dst[c] = da[c] * self.activation.derivative(z[c]);
                }
            }
        }
        let d_relations = self.filter.backward_batch(&trace.filter, &d_responses, grads)?;
        let d_in = trace.input_features;
        let mut input_grad = Matrix::zeros(trace.input_len, s + d_in);
        if d_in > 0 {
            for q in 0..nq {
                for (n, &j) in trace.table.indices(q).iter().enumerate() {
                    let src = &d_relations.row(q * k + n)[s + 1..];
                    for (g, &v) in input_grad.row_mut(j)[s..].iter_mut().zip(src) {
                        *g += v;
                    }
                }
            }
        }
        Ok(input_grad)
    }

    pub fn cast<U: Real>(&self) -> GenConvLayer<U> {
        GenConvLayer {
            filter: self.filter.cast(),
            k: self.k,
            stride_fraction: self.stride_fraction,
            activation: self.activation,
            spatial_dims: self.spatial_dims,
            cache: None,
        }
    }
}

impl<T: Real> ParameterCount for GenConvLayer<T> {
    fn parameter_count(&self) -> usize {
        self.filter.parameter_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::DEFAULT_LEAKY_SLOPE;
    use crate::rng::seeded;

    fn leaky() -> Activation {
        Activation::leaky(DEFAULT_LEAKY_SLOPE)
    }

    fn random_cloud(n: usize, s: usize, d: usize, seed: u64) -> PointCloud<f64> {
        let mut rng = seeded(seed);
        let data = (0..n * (s + d)).map(|_| rng.random_range(-1.0..1.0)).collect();
        PointCloud::new(s, d, data).unwrap()
    }

    #[test]
    fn zero_filter_gives_zero_activations() {
        let filter = FilterNetwork::<f64>::zeros(&[4, 6, 5], leaky(), Activation::Identity).unwrap();
        let mut layer = GenConvLayer::new(filter, 2, 4, 1.0, leaky()).unwrap();
        let cloud = random_cloud(30, 2, 1, 1);
        let out = layer.forward(&cloud, &mut seeded(0)).unwrap();
        assert_eq!(out.len(), 30);
        assert_eq!(out.width(), 2 + 5);
        for i in 0..out.len() {
            assert!(out.features(i).iter().all(|&a| a == 0.0));
            assert_eq!(out.coords(i), cloud.coords(i));
        }
    }

    #[test]
    fn output_shape_with_stride() {
        let mut rng = seeded(2);
        let filter = FilterNetwork::<f32>::random(&[4, 8, 6], leaky(), Activation::Identity, &mut rng).unwrap();
        let mut layer = GenConvLayer::new(filter, 3, 8, 0.5, leaky()).unwrap();
        let cloud = random_cloud(101, 3, 0, 3).cast::<f32>();
        let out = layer.forward(&cloud, &mut rng).unwrap();
        assert_eq!(out.len(), 51);
        assert_eq!(out.width(), 3 + 6);
    }

    #[test]
    fn backward_before_forward() {
        let filter = FilterNetwork::<f64>::zeros(&[3, 2], leaky(), Activation::Identity).unwrap();
        let layer = GenConvLayer::new(filter, 2, 2, 1.0, leaky()).unwrap();
        assert!(matches!(layer.backward(&Matrix::zeros(1, 4)), Err(Error::State(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = seeded(4);
        let filter = FilterNetwork::<f64>::random(&[5, 4, 3], leaky(), Activation::Identity, &mut rng).unwrap();
        let mut layer = GenConvLayer::new(filter, 2, 3, 1.0, leaky()).unwrap();
        let cloud = random_cloud(10, 2, 2, 5);
        let out = layer.forward(&cloud, &mut rng).unwrap();
        let (grads, input_grad) = layer.backward(&Matrix::zeros(out.len(), out.width())).unwrap();
        assert!(grads.is_zero());
        assert!(input_grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unreached_points_get_no_feature_gradient() {
        let mut rng = seeded(6);
        let filter = FilterNetwork::<f64>::random(&[4, 4, 3], leaky(), Activation::Identity, &mut rng).unwrap();
        let mut layer = GenConvLayer::new(filter, 2, 2, 1.0, leaky()).unwrap();
        // A tight cluster at the origin plus one far outlier (index 4).
        let data = vec![0.0, 0.0, 0.5, 0.1, 0.0, -0.3, 0.0, 0.1, 0.7, 0.1, 0.1, 0.2, 50.0, 50.0, 0.9];
        let cloud = PointCloud::new(2, 1, data).unwrap();
        let out = layer.forward_at(&cloud, vec![0, 1]).unwrap();
        let upstream = Matrix::from_vec(2, out.width(), vec![1.0; 2 * out.width()]).unwrap();
        let (_, g) = layer.backward(&upstream).unwrap();
        let reached: Vec<usize> = layer.trace().unwrap().neighbors().all_indices().to_vec();
        assert!(!reached.contains(&4));
        assert_eq!(g.row(4), &[0.0, 0.0, 0.0]);
        assert!(g.row(0)[2] != 0.0);
        for i in 0..5 {
            assert_eq!(&g.row(i)[..2], &[0.0, 0.0]);
        }
    }

    #[test]
    fn rejects_mismatched_cloud() {
        let filter = FilterNetwork::<f64>::zeros(&[4, 2], leaky(), Activation::Identity).unwrap();
        let mut layer = GenConvLayer::new(filter, 2, 2, 1.0, leaky()).unwrap();
        let cloud = random_cloud(5, 2, 0, 1);
        assert!(matches!(layer.forward(&cloud, &mut seeded(0)), Err(Error::Shape(_))));
    }
}
