//! Wall-clock scaling of neighbour search and one layer forward pass.

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use crate::layer::{GenConvLayer, PointCloud};
use crate::numeric::{Activation, FilterNetwork, DEFAULT_LEAKY_SLOPE};
use crate::rng::{derive_indexed, seeded, STREAM_DATA, STREAM_INIT};
use crate::spatial::KdTree;
use crate::{Error, Result};

/// Layer measured by [`bench_scaling`]; operates on 3D clouds without features.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchLayer {
    pub hidden: Vec<usize>,
    pub out_features: usize,
    pub stride_fraction: f64,
}

impl Default for BenchLayer {
    fn default() -> Self {
        BenchLayer { hidden: vec![16, 16], out_features: 16, stride_fraction: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub knn_samples_ms: Vec<f64>,
    pub forward_samples_ms: Vec<f64>,
    pub knn_ms: f64,
    pub forward_ms: f64,
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => s[n / 2],
        _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// For each `N`: one warm-up run, then `repetitions` timed runs of
/// (a) KD-tree build plus K-NN query of every point and (b) a full layer
/// forward pass, on a seeded uniform cloud in the unit cube. Runs on the
/// calling thread.
pub fn bench_scaling(counts: &[usize], k: usize, layer: &BenchLayer, repetitions: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("point counts must be ascending: {counts:?}")));
    }
    if counts.first() == Some(&0) || repetitions == 0 {
        return Err(Error::InvalidArgument("counts and repetitions must be positive".into()));
    }
    let mut widths = vec![4];
    widths.extend(&layer.hidden);
    widths.push(layer.out_features);
    let leaky = Activation::leaky(DEFAULT_LEAKY_SLOPE);
    let filter = FilterNetwork::<f32>::random(&widths, leaky, Activation::Identity, &mut seeded(derive_indexed(seed, STREAM_INIT, 0)))?;
    let mut conv = GenConvLayer::new(filter, 3, k, layer.stride_fraction, leaky)?;
    let mut rows = Vec::with_capacity(counts.len());
    for &n in counts {
        let mut rng = seeded(derive_indexed(seed, STREAM_DATA, n as u64));
        let coords: Vec<f32> = (0..n * 3).map(|_| rng.random::<f32>()).collect();
        let cloud = PointCloud::from_coords(3, coords)?;
        let flat = cloud.coords_f64();
        let mut knn_samples = Vec::with_capacity(repetitions);
        let mut forward_samples = Vec::with_capacity(repetitions);
        for rep in 0..=repetitions {
            let t = Instant::now();
            let tree = KdTree::build(&flat, 3)?;
            let table = tree.knn_query(&flat, k)?;
            let knn = millis(t);
            std::hint::black_box(&table);

            let mut stride_rng = seeded(derive_indexed(seed, STREAM_DATA, rep as u64));
            let t = Instant::now();
            let out = conv.forward(&cloud, &mut stride_rng)?;
            let fwd = millis(t);
            std::hint::black_box(&out);
            if rep > 0 {
                knn_samples.push(knn);
                forward_samples.push(fwd);
            }
        }
        rows.push(BenchRow {
            n,
            knn_ms: median(&knn_samples),
            forward_ms: median(&forward_samples),
            knn_samples_ms: knn_samples,
            forward_samples_ms: forward_samples,
        });
    }
    Ok(rows)
}

/// Successive `(knn, forward)` time ratios between consecutive rows.
pub fn doubling_ratios(rows: &[BenchRow]) -> Vec<(usize, f64, f64)> {
    rows.windows(2).map(|w| (w[1].n, w[1].knn_ms / w[0].knn_ms, w[1].forward_ms / w[0].forward_ms)).collect()
}

/// CSV with columns `N,knn_ms,forward_ms`.
pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["N", "knn_ms", "forward_ms"]).map_err(err)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.knn_ms.to_string(), r.forward_ms.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
