//! Two-dimensional squares and circles.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabeledCloud;
use crate::layer::PointCloud;
use crate::rng::{derive_indexed, seeded, STREAM_DATA};
use crate::{Error, Real, Result};

/// Class names in label order.
pub const TOY_CLASSES: [&str; 2] = ["circle", "square"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyShape {
    Circle,
    Square,
}

impl ToyShape {
    pub fn label(self) -> usize {
        match self {
            ToyShape::Circle => 0,
            ToyShape::Square => 1,
        }
    }

    pub fn name(self) -> &'static str {
        TOY_CLASSES[self.label()]
    }

    pub fn from_label(label: usize) -> Option<Self> {
        match label {
            0 => Some(ToyShape::Circle),
            1 => Some(ToyShape::Square),
            _ => None,
        }
    }
}

impl FromStr for ToyShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circle" => Ok(ToyShape::Circle),
            "square" => Ok(ToyShape::Square),
            other => Err(Error::InvalidArgument(format!("unknown toy shape {other:?}"))),
        }
    }
}

/// Points uniformly distributed along the outline of a circle of radius
/// `size` or a square of side `size`, with Gaussian jitter of standard
/// deviation `jitter · size` on each coordinate.
pub fn gen_toy_cloud<T: Real>(
    shape: ToyShape,
    n_points: usize,
    center: [f64; 2],
    size: f64,
    jitter: f64,
    seed: u64,
) -> Result<LabeledCloud<T>> {
    if n_points < 8 {
        return Err(Error::InvalidArgument(format!("toy clouds need at least 8 points, got {n_points}")));
    }
    if !(size > 0.0) || !(jitter >= 0.0) {
        return Err(Error::InvalidArgument(format!("size {size} must be > 0 and jitter {jitter} >= 0")));
    }
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, jitter * size).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut coords = Vec::with_capacity(n_points * 2);
    for _ in 0..n_points {
        let (x, y) = match shape {
            ToyShape::Circle => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                (size * theta.cos(), size * theta.sin())
            }
            ToyShape::Square => {
                let h = size / 2.0;
                let t: f64 = rng.random_range(0.0..4.0);
                let side = t.floor().min(3.0);
                let u = -h + (t - side) * size;
                match side as u8 {
                    0 => (u, -h),
                    1 => (h, u),
                    2 => (-u, h),
                    _ => (-h, -u),
                }
            }
        };
        let (jx, jy) = if jitter > 0.0 { (noise.sample(&mut rng), noise.sample(&mut rng)) } else { (0.0, 0.0) };
        coords.push(T::of(center[0] + x + jx));
        coords.push(T::of(center[1] + y + jy));
    }
    Ok(LabeledCloud {
        cloud: PointCloud::from_coords(2, coords)?,
        label: shape.label(),
        class_name: shape.name().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub n_points: usize,
    /// Jitter standard deviation as a fraction of the shape size.
    pub jitter: f64,
    /// Outer radius range: circle radius, square half-side.
    pub min_extent: f64,
    pub max_extent: f64,
    /// Centres are drawn from `[-center_range, center_range]²`.
    pub center_range: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { n_points: 100, jitter: 0.01, min_extent: 0.5, max_extent: 1.0, center_range: 0.2 }
    }
}

/// `count` clouds alternating circle, square, … so classes stay balanced.
/// Cloud `i` depends only on `(seed, i)`.
pub fn gen_toy_dataset<T: Real>(count: usize, config: &ToyConfig, seed: u64) -> Result<Vec<LabeledCloud<T>>> {
    if !(config.min_extent > 0.0 && config.max_extent >= config.min_extent) {
        return Err(Error::InvalidArgument("toy extent range must be positive and ordered".into()));
    }
    (0..count)
        .map(|i| {
            let cloud_seed = derive_indexed(seed, STREAM_DATA, i as u64);
            let mut rng = seeded(cloud_seed);
            let shape = ToyShape::from_label(i % 2).expect("two classes");
            let extent = if config.max_extent > config.min_extent {
                rng.random_range(config.min_extent..config.max_extent)
            } else {
                config.min_extent
            };
            let c = config.center_range;
            let center = if c > 0.0 { [rng.random_range(-c..c), rng.random_range(-c..c)] } else { [0.0, 0.0] };
            let size = match shape {
                ToyShape::Circle => extent,
                ToyShape::Square => 2.0 * extent,
            };
            gen_toy_cloud(shape, config.n_points, center, size, config.jitter, rng.random())
        })
        .collect()
}
