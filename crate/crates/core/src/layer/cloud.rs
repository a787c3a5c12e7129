use crate::numeric::Matrix;
use crate::{Error, Real, Result};

/// N points, each `S` coordinates followed by `D` feature channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    spatial_dims: usize,
    feature_dims: usize,
    data: Vec<T>,
}

fn interleave<T: Real>(spatial_dims: usize, coords: &[T], feature_dims: usize, features: &[T]) -> Result<Vec<T>> {
    if spatial_dims == 0 || coords.len() % spatial_dims != 0 {
        return Err(Error::shape("coordinate list does not match spatial dimension"));
    }
    let n = coords.len() / spatial_dims;
    if features.len() != n * feature_dims {
        return Err(Error::shape(format!("{n} points need {} feature values, got {}", n * feature_dims, features.len())));
    }
    let mut data = Vec::with_capacity(n * (spatial_dims + feature_dims));
    for i in 0..n {
        data.extend_from_slice(&coords[i * spatial_dims..(i + 1) * spatial_dims]);
        data.extend_from_slice(&features[i * feature_dims..(i + 1) * feature_dims]);
    }
    Ok(data)
}

impl<T: Real> PointCloud<T> {
    pub fn new(spatial_dims: usize, feature_dims: usize, data: Vec<T>) -> Result<Self> {
        if !(2..=3).contains(&spatial_dims) {
            return Err(Error::InvalidArgument(format!("spatial dimension {spatial_dims} must be 2 or 3")));
        }
        let width = spatial_dims + feature_dims;
        if data.is_empty() {
            return Err(Error::EmptyInput("point cloud has no points".into()));
        }
        if data.len() % width != 0 {
            return Err(Error::shape(format!("{} values do not form rows of width {width}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value in point {}", i / width)));
        }
        Ok(PointCloud { spatial_dims, feature_dims, data })
    }

    /// Geometry-only cloud (`D = 0`).
    pub fn from_coords(spatial_dims: usize, coords: Vec<T>) -> Result<Self> {
        Self::new(spatial_dims, 0, coords)
    }

    /// Joins per-point coordinates and features.
    pub fn from_parts(spatial_dims: usize, coords: &[T], feature_dims: usize, features: &[T]) -> Result<Self> {
        Self::new(spatial_dims, feature_dims, interleave(spatial_dims, coords, feature_dims, features)?)
    }

    /// Like [`PointCloud::from_parts`] but lets non-finite features through,
    /// so diverged activations surface as a non-finite loss downstream.
    pub(crate) fn from_activations(spatial_dims: usize, coords: &[T], feature_dims: usize, features: &[T]) -> Result<Self> {
        let data = interleave(spatial_dims, coords, feature_dims, features)?;
        Ok(PointCloud { spatial_dims, feature_dims, data })
    }

    #[inline]
    pub fn spatial_dims(&self) -> usize {
        self.spatial_dims
    }

    #[inline]
    pub fn feature_dims(&self) -> usize {
        self.feature_dims
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.spatial_dims + self.feature_dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn coords(&self, i: usize) -> &[T] {
        &self.point(i)[..self.spatial_dims]
    }

    #[inline]
    pub fn features(&self, i: usize) -> &[T] {
        &self.point(i)[self.spatial_dims..]
    }

    pub fn features_mut(&mut self, i: usize) -> &mut [T] {
        let (w, s) = (self.width(), self.spatial_dims);
        &mut self.data[i * w + s..(i + 1) * w]
    }

    pub fn coords_mut(&mut self, i: usize) -> &mut [T] {
        let (w, s) = (self.width(), self.spatial_dims);
        &mut self.data[i * w..i * w + s]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// All coordinates, flattened, widened to `f64` for neighbour search.
    pub fn coords_f64(&self) -> Vec<f64> {
        (0..self.len()).flat_map(|i| self.coords(i).iter().map(|c| c.as_f64())).collect()
    }

    pub fn as_matrix(&self) -> Matrix<T> {
        Matrix::from_vec(self.len(), self.width(), self.data.clone()).expect("consistent shape")
    }

    pub fn translated(&self, offset: &[T]) -> Self {
        let mut out = self.clone();
        for i in 0..out.len() {
            for (c, &t) in out.coords_mut(i).iter_mut().zip(offset) {
                *c += t;
            }
        }
        out
    }

    /// Point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() || perm.iter().any(|&p| p >= self.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation of the point indices".into()));
        }
        Ok(self.select(perm))
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let data = indices.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        PointCloud { spatial_dims: self.spatial_dims, feature_dims: self.feature_dims, data }
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            spatial_dims: self.spatial_dims,
            feature_dims: self.feature_dims,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
