//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use genconv::layer::{GenConvLayer, PointCloud};
use genconv::numeric::{Activation, FilterNetwork};
use genconv::rng::seeded;
use genconv::train::{FilterOutput, HeadSpec, LayerSpec, ModelConfig};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_cloud(rng: &mut impl Rng, n: usize, s: usize, d: usize, scale: f64) -> PointCloud<f64> {
    let data: Vec<f64> = (0..n * (s + d))
        .map(|i| if i % (s + d) < s { scale * rng.random_range(-1.0..1.0) } else { StandardNormal.sample(rng) })
        .collect();
    PointCloud::new(s, d, data).unwrap()
}

pub fn random_filter(rng: &mut impl Rng, widths: &[usize], slope: f64) -> FilterNetwork<f64> {
    let mut net = FilterNetwork::random(widths, Activation::leaky(slope), Activation::Identity, rng).unwrap();
    for layer in net.layers_mut() {
        for b in layer.bias.iter_mut() {
            *b = 0.1 * rng.random_range(-1.0..1.0);
        }
    }
    net
}

/// All-pairs neighbour list ordered by (distance, index), computed directly.
pub fn naive_neighbors(points: &[f64], s: usize, query: &[f64], k: usize) -> Vec<(usize, f64)> {
    let n = points.len() / s;
    let mut all: Vec<(usize, f64)> = (0..n)
        .map(|j| {
            let p = &points[j * s..(j + 1) * s];
            (j, p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k.min(n));
    all
}

/// Explicit loop evaluation of a filter network.
pub fn naive_mlp(net: &FilterNetwork<f64>, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for layer in net.layers() {
        let mut y = vec![0.0; layer.output_width()];
        for (o, yo) in y.iter_mut().enumerate() {
            let mut acc = layer.bias[o];
            for (i, xi) in x.iter().enumerate() {
                acc += layer.weight.get(o, i) * xi;
            }
            *yo = match layer.activation {
                Activation::Identity => acc,
                Activation::LeakyRelu { slope } => {
                    if acc >= 0.0 {
                        acc
                    } else {
                        slope * acc
                    }
                }
            };
        }
        x = y;
    }
    x
}

/// Triple loop over queries, neighbours and channels.
pub fn naive_layer(layer: &GenConvLayer<f64>, cloud: &PointCloud<f64>, queries: &[usize]) -> Vec<Vec<f64>> {
    let s = cloud.spatial_dims();
    let coords = cloud.coords_f64();
    let slope = match layer.activation() {
        Activation::LeakyRelu { slope } => slope,
        Activation::Identity => 1.0,
    };
    queries
        .iter()
        .map(|&q| {
            let origin = cloud.coords(q).to_vec();
            let mut sum = vec![0.0; layer.output_features()];
            for (j, _) in naive_neighbors(&coords, s, &origin, layer.k()) {
                let mut rel: Vec<f64> = cloud.coords(j).iter().zip(&origin).map(|(a, b)| a - b).collect();
                let dist = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
                rel.push(dist);
                rel.extend_from_slice(cloud.features(j));
                for (acc, v) in sum.iter_mut().zip(naive_mlp(layer.filter(), &rel)) {
                    *acc += v;
                }
            }
            let mut row = origin;
            row.extend(sum.into_iter().map(|z| if z >= 0.0 { z } else { slope * z }));
            row
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Small two-layer model whose filter networks are at most eight wide.
pub fn miniature_config(seed: u64, spatial_dims: usize, features: usize) -> ModelConfig {
    let mut rng = seeded(seed ^ 0x5eed);
    let max_out = 8 - spatial_dims - 1;
    let first = rng.random_range(2..=max_out);
    let second = rng.random_range(2..=max_out);
    let layers = vec![
        LayerSpec { k: 4, stride_fraction: 0.5, hidden: vec![rng.random_range(3..=8)], out_features: first, in_features: None },
        LayerSpec { k: 4, stride_fraction: 1.0, hidden: vec![rng.random_range(3..=8)], out_features: second, in_features: None },
    ];
    ModelConfig {
        spatial_dims,
        input_features: features,
        num_classes: 3,
        layers,
        head: HeadSpec { hidden: vec![rng.random_range(3..=8)] },
        leaky_slope: 0.1,
        filter_output: FilterOutput::Identity,
        optimizer: Default::default(),
        epochs: 1,
        seed,
        accumulate: 1,
    }
}

pub struct GradCheck {
    pub params: usize,
    pub worst_rel: f64,
    pub worst_abs: f64,
    pub failures: usize,
}

fn loss_with_stride(model: &genconv::train::Model<f64>, cloud: &PointCloud<f64>, label: usize, stride_seed: u64) -> f64 {
    let logits = model.predict(cloud, &mut seeded(stride_seed)).unwrap();
    genconv::numeric::softmax_cross_entropy(&logits, label).unwrap().0
}

/// Compares every reverse-mode parameter gradient against a central
/// difference with step `h`; a component passes if either its absolute error
/// is within `abs_floor` or its relative error within `rel_tol`.
pub fn check_model_gradient(
    model: &mut genconv::train::Model<f64>,
    cloud: &PointCloud<f64>,
    label: usize,
    stride_seed: u64,
    h: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> GradCheck {
    let logits = model.forward(cloud, &mut seeded(stride_seed)).unwrap();
    let (_, dlogits) = genconv::numeric::softmax_cross_entropy(&logits, label).unwrap();
    let analytic = model.backward(&dlogits).unwrap();
    let base = model.flatten_params();
    let mut out = GradCheck { params: base.len(), worst_rel: 0.0, worst_abs: 0.0, failures: 0 };
    let mut probe = model.clone();
    let mut params = base.clone();
    for p in 0..base.len() {
        params[p] = base[p] + h;
        probe.load_params(&params).unwrap();
        let up = loss_with_stride(&probe, cloud, label, stride_seed);
        params[p] = base[p] - h;
        probe.load_params(&params).unwrap();
        let down = loss_with_stride(&probe, cloud, label, stride_seed);
        params[p] = base[p];
        let numeric = (up - down) / (2.0 * h);
        let abs = (numeric - analytic[p]).abs();
        let rel = rel_err(numeric, analytic[p]);
        if abs > abs_floor {
            out.worst_rel = out.worst_rel.max(rel);
            out.worst_abs = out.worst_abs.max(abs);
            if rel > rel_tol {
                out.failures += 1;
            }
        }
    }
    out
}
