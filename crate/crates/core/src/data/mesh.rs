use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::layer::PointCloud;
use crate::rng::seeded;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= vertices.len())) {
            return Err(Error::InvalidArgument(format!("face {f:?} indexes past {} vertices", vertices.len())));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        let n = cross(sub(b, a), sub(c, a));
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }
}

/// Area-weighted surface sampling: choose a triangle with probability
/// proportional to its area, then a uniform point inside it.
pub fn sample_mesh<T: Real>(mesh: &TriangleMesh, n_points: usize, seed: u64) -> Result<PointCloud<T>> {
    Ok(sample_mesh_with_faces(mesh, n_points, seed)?.0)
}

/// Like [`sample_mesh`], also returning the face each point came from.
pub fn sample_mesh_with_faces<T: Real>(
    mesh: &TriangleMesh,
    n_points: usize,
    seed: u64,
) -> Result<(PointCloud<T>, Vec<usize>)> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("cannot sample zero points".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Data("mesh has zero surface area".into()));
    }
    let chooser = WeightedIndex::new(&areas).map_err(|e| Error::Data(format!("bad face weights: {e}")))?;
    let mut rng = seeded(seed);
    let mut coords = Vec::with_capacity(n_points * 3);
    let mut picked = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let f = chooser.sample(&mut rng);
        let [a, b, c] = mesh.triangle(f);
        let mut u: f64 = rng.random();
        let mut v: f64 = rng.random();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        for d in 0..3 {
            coords.push(T::of(a[d] + u * (b[d] - a[d]) + v * (c[d] - a[d])));
        }
        picked.push(f);
    }
    Ok((PointCloud::from_coords(3, coords)?, picked))
}
