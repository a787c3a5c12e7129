use crate::layer::PointCloud;
use crate::Real;

/// Moves the centroid to the origin and scales so the farthest point has
/// norm 1. Features are left alone; a cloud of coincident points is only
/// centred.
pub fn normalize_cloud<T: Real>(cloud: &PointCloud<T>) -> PointCloud<T> {
    let s = cloud.spatial_dims();
    let n = cloud.len() as f64;
    let mut centroid = vec![0.0_f64; s];
    for i in 0..cloud.len() {
        for (c, &x) in centroid.iter_mut().zip(cloud.coords(i)) {
            *c += x.as_f64();
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n);
    let mut max_norm = 0.0_f64;
    for i in 0..cloud.len() {
        let r2: f64 = cloud.coords(i).iter().zip(&centroid).map(|(&x, c)| (x.as_f64() - c).powi(2)).sum();
        max_norm = max_norm.max(r2.sqrt());
    }
    let scale = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
    let mut out = cloud.clone();
    for i in 0..out.len() {
        for (x, c) in out.coords_mut(i).iter_mut().zip(&centroid) {
            *x = T::of((x.as_f64() - c) * scale);
        }
    }
    out
}
