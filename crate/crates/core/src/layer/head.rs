//! The global head: one generalized convolution whose only query is the
//! origin and whose neighbours are every point of the incoming cloud.

use super::relations::{push_relation, relation_width};
use super::PointCloud;
use crate::numeric::{BatchTrace, FilterNetwork, Matrix, NetworkGrads, ParameterCount};
use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct GlobalHead<T> {
    filter: FilterNetwork<T>,
    spatial_dims: usize,
    cache: Option<HeadTrace<T>>,
}

#[derive(Debug, Clone)]
pub struct HeadTrace<T> {
    points: usize,
    features: usize,
    filter: BatchTrace<T>,
}

impl<T: Real> PartialEq for GlobalHead<T> {
    fn eq(&self, other: &Self) -> bool {
        self.filter == other.filter && self.spatial_dims == other.spatial_dims
    }
}

impl<T: Real> GlobalHead<T> {
    pub fn new(filter: FilterNetwork<T>, spatial_dims: usize) -> Result<Self> {
        if !(2..=3).contains(&spatial_dims) {
            return Err(Error::InvalidArgument(format!("spatial dimension {spatial_dims} must be 2 or 3")));
        }
        if filter.input_width() <= spatial_dims {
            return Err(Error::shape("head filter too narrow for its spatial inputs"));
        }
        Ok(GlobalHead { filter, spatial_dims, cache: None })
    }

    pub fn filter(&self) -> &FilterNetwork<T> {
        &self.filter
    }

    pub fn filter_mut(&mut self) -> &mut FilterNetwork<T> {
        self.cache = None;
        &mut self.filter
    }

    pub fn input_features(&self) -> usize {
        self.filter.input_width() - self.spatial_dims - 1
    }

    pub fn classes(&self) -> usize {
        self.filter.output_width()
    }

    fn relations(&self, cloud: &PointCloud<T>, origin: &[T]) -> Result<Matrix<T>> {
        if cloud.spatial_dims() != self.spatial_dims
            || relation_width(cloud.spatial_dims(), cloud.feature_dims()) != self.filter.input_width()
        {
            return Err(Error::shape(format!(
                "head expects {}-D points with {} features, got {}-D with {}",
                self.spatial_dims,
                self.input_features(),
                cloud.spatial_dims(),
                cloud.feature_dims()
            )));
        }
        let mut data = Vec::with_capacity(cloud.len() * self.filter.input_width());
        for j in 0..cloud.len() {
            push_relation(&mut data, origin, cloud.coords(j), cloud.features(j));
        }
        Matrix::from_vec(cloud.len(), self.filter.input_width(), data)
    }

    fn run(&self, cloud: &PointCloud<T>) -> Result<(Vec<T>, HeadTrace<T>)> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput("global head needs at least one point".into()));
        }
        let origin = vec![T::zero(); self.spatial_dims];
        let relations = self.relations(cloud, &origin)?;
        let (responses, trace) = self.filter.forward_batch(&relations)?;
        let logits = responses.sum_row_groups(cloud.len())?.into_vec();
        Ok((logits, HeadTrace { points: cloud.len(), features: cloud.feature_dims(), filter: trace }))
    }

    /// Pre-softmax logits; caches the trace for [`GlobalHead::backward`].
    pub fn forward(&mut self, cloud: &PointCloud<T>) -> Result<Vec<T>> {
        let (logits, trace) = self.run(cloud)?;
        self.cache = Some(trace);
        Ok(logits)
    }

    pub fn infer(&self, cloud: &PointCloud<T>) -> Result<Vec<T>> {
        Ok(self.run(cloud)?.0)
    }

    /// Per-point logits: the head evaluated with every point as its own
    /// query and the whole cloud as neighbours (`N × C`).
    pub fn infer_dense(&self, cloud: &PointCloud<T>) -> Result<Matrix<T>> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput("global head needs at least one point".into()));
        }
        let mut out = Matrix::zeros(cloud.len(), self.classes());
        for i in 0..cloud.len() {
            let relations = self.relations(cloud, cloud.coords(i))?;
            let sums = self.filter.eval_batch(&relations)?.sum_row_groups(cloud.len())?;
            out.row_mut(i).copy_from_slice(sums.row(0));
        }
        Ok(out)
    }

    /// Gradients of `upstream · logits`: filter parameters, and the incoming
    /// cloud (`N × (S + D)`, coordinate columns zero).
    pub fn backward(&self, upstream: &[T]) -> Result<(NetworkGrads<T>, Matrix<T>)> {
        let trace = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("head backward called before forward".into()))?;
        let mut grads = NetworkGrads::zeros_like(&self.filter);
        let g = self.backward_trace(trace, upstream, &mut grads)?;
        Ok((grads, g))
    }

    pub fn backward_trace(&self, trace: &HeadTrace<T>, upstream: &[T], grads: &mut NetworkGrads<T>) -> Result<Matrix<T>> {
        if upstream.len() != self.classes() {
            return Err(Error::shape(format!("{} logit gradients for {} classes", upstream.len(), self.classes())));
        }
        let mut d_responses = Matrix::zeros(trace.points, self.classes());
        for j in 0..trace.points {
            d_responses.row_mut(j).copy_from_slice(upstream);
        }
        let d_rel = self.filter.backward_batch(&trace.filter, &d_responses, grads)?;
        let s = self.spatial_dims;
        let mut input_grad = Matrix::zeros(trace.points, s + trace.features);
        for j in 0..trace.points {
            input_grad.row_mut(j)[s..].copy_from_slice(&d_rel.row(j)[s + 1..]);
        }
        Ok(input_grad)
    }

    pub fn cast<U: Real>(&self) -> GlobalHead<U> {
        GlobalHead { filter: self.filter.cast(), spatial_dims: self.spatial_dims, cache: None }
    }
}

impl<T: Real> ParameterCount for GlobalHead<T> {
    fn parameter_count(&self) -> usize {
        self.filter.parameter_count()
    }
}
