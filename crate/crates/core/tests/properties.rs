mod common;

use common::*;
use genconv::data::{gen_toy_cloud, normalize_cloud, read_pcld, sample_mesh, write_pcld, LabeledCloud, ToyShape, TriangleMesh};
use genconv::layer::{extract_relations, query_count, stride_sample, GenConvLayer, GlobalHead, PointCloud};
use genconv::numeric::{softmax_cross_entropy, Activation, Matrix, ParameterCount};
use genconv::rng::seeded;
use genconv::spatial::{brute_force_knn, KdTree};
use genconv::viz::probe_filter;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn cloud_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=3, 1usize..=max_n).prop_flat_map(|(dim, n)| (Just(dim), prop::collection::vec(-10.0f64..10.0, n * dim)))
}

fn closest_on_triangle(p: [f64; 3], [a, b, c]: [[f64; 3]; 3]) -> [f64; 3] {
    let sub = |x: [f64; 3], y: [f64; 3]| [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let along = |o: [f64; 3], d: [f64; 3], t: f64| [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
    let (ab, ac, ap) = (sub(b, a), sub(c, a), sub(p, a));
    let (d1, d2) = (dot(ab, ap), dot(ac, ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let (d3, d4) = (dot(ab, bp), dot(ac, bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return along(a, ab, d1 / (d1 - d3));
    }
    let cp = sub(p, c);
    let (d5, d6) = (dot(ab, cp), dot(ac, cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return along(a, ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return along(b, sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    [a[0] + ab[0] * v + ac[0] * w, a[1] + ab[1] * v + ac[1] * w, a[2] + ab[2] * v + ac[2] * w]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kdtree_matches_brute_force((dim, points) in cloud_strategy(400), k in 1usize..40, leaf in 1usize..20, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let queries: Vec<f64> = (0..30 * dim).map(|_| rng.random_range(-12.0..12.0)).collect();
        let tree = KdTree::build_with_leaf_capacity(&points, dim, leaf).unwrap();
        prop_assert!(tree.check_invariants());
        let fast = tree.knn_query(&queries, k).unwrap();
        let slow = brute_force_knn(&points, &queries, dim, k).unwrap();
        prop_assert_eq!(fast.all_indices(), slow.all_indices());
        for q in 0..fast.query_count() {
            prop_assert_eq!(fast.distances(q), slow.distances(q));
            prop_assert!(fast.distances(q).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn stored_points_find_themselves((dim, points) in cloud_strategy(200)) {
        let tree = KdTree::build(&points, dim).unwrap();
        let table = tree.knn_query(&points, 3).unwrap();
        for q in 0..table.query_count() {
            prop_assert_eq!(table.distances(q)[0], 0.0);
            let first = table.indices(q)[0];
            prop_assert_eq!(&points[first * dim..(first + 1) * dim], &points[q * dim..(q + 1) * dim]);
            prop_assert!(first <= q);
        }
    }

    #[test]
    fn relations_hold_offsets_distance_and_features(seed in any::<u64>(), n in 1usize..120, k in 1usize..12) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=3));
        let cloud = random_cloud(&mut rng, n, s, d, 3.0);
        let queries = stride_sample(n, 0.5, &mut rng).unwrap();
        let qc: Vec<f64> = queries.iter().flat_map(|&q| cloud.coords(q).to_vec()).collect();
        let table = KdTree::build(&cloud.coords_f64(), s).unwrap().knn_query(&qc, k).unwrap();
        let rel = extract_relations(&cloud, &qc, &table).unwrap();
        for (qi, &q) in queries.iter().enumerate() {
            for (j, &nb) in table.indices(qi).iter().enumerate() {
                let row = rel.relation(qi, j);
                let norm = row[..s].iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(rel_err(row[s], norm) <= 1e-6);
                for a in 0..s {
                    prop_assert_eq!(row[a], cloud.coords(nb)[a] - cloud.coords(q)[a]);
                }
                prop_assert_eq!(&row[s + 1..], cloud.features(nb));
            }
        }
    }

    #[test]
    fn relations_translation_invariant(seed in any::<u64>(), n in 2usize..150, k in 1usize..16, t in prop::collection::vec(-5.7f64..5.7, 3)) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=2));
        let cloud = random_cloud(&mut rng, n, s, d, 1.0);
        let moved = cloud.translated(&t[..s]);
        let queries = stride_sample(n, 0.5, &mut rng).unwrap();
        let build = |c: &PointCloud<f64>| {
            let qc: Vec<f64> = queries.iter().flat_map(|&q| c.coords(q).to_vec()).collect();
            let table = KdTree::build(&c.coords_f64(), s).unwrap().knn_query(&qc, k).unwrap();
            (extract_relations(c, &qc, &table).unwrap(), table)
        };
        let ((a, ta), (b, tb)) = (build(&cloud), build(&moved));
        prop_assert_eq!(ta.all_indices(), tb.all_indices());
        for (x, y) in a.as_matrix().as_slice().iter().zip(b.as_matrix().as_slice()) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn output_shape_law(seed in any::<u64>(), n in 1usize..400, rho in 0.05f64..=1.0, out in 1usize..10) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=3));
        let filter = random_filter(&mut rng, &[s + 1 + d, 6, out], 0.01);
        let mut layer = GenConvLayer::new(filter, s, 8, rho, Activation::leaky(0.01)).unwrap();
        let cloud = random_cloud(&mut rng, n, s, d, 1.0);
        let y = layer.forward(&cloud, &mut rng).unwrap();
        prop_assert_eq!(y.len(), ((rho * n as f64).ceil() as usize).clamp(1, n));
        prop_assert_eq!(y.len(), query_count(n, rho));
        prop_assert_eq!(y.width(), s + out);
    }

    #[test]
    fn stride_sample_is_sorted_distinct(n in 1usize..5000, rho in 0.01f64..=1.0, seed in any::<u64>()) {
        let idx = stride_sample(n, rho, &mut seeded(seed)).unwrap();
        prop_assert_eq!(idx.len(), query_count(n, rho));
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|&i| i < n));
    }

    #[test]
    fn head_permutation_invariant(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=3));
        let head = GlobalHead::new(random_filter(&mut rng, &[s + 1 + d, 12, 4], 0.01), s).unwrap();
        let cloud = random_cloud(&mut rng, n, s, d, 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = head.infer(&cloud).unwrap();
        let b = head.infer(&cloud.permuted(&perm).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn layer_matches_triple_loop(seed in any::<u64>(), n in 1usize..100, k in 1usize..20) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=2));
        let filter = random_filter(&mut rng, &[s + 1 + d, 7, 5], 0.05);
        let layer = GenConvLayer::new(filter, s, k, 0.5, Activation::leaky(0.05)).unwrap();
        let cloud = random_cloud(&mut rng, n, s, d, 2.0);
        let queries = stride_sample(n, 0.5, &mut rng).unwrap();
        let (out, _) = layer.run(&cloud, queries.clone()).unwrap();
        for (q, row) in naive_layer(&layer, &cloud, &queries).iter().enumerate() {
            for (a, b) in out.point(q).iter().zip(row) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn softmax_gradient_sums_to_zero(logits in prop::collection::vec(-50.0f64..50.0, 1..20), pick in any::<prop::sample::Index>()) {
        let label = pick.index(logits.len());
        let (loss, grad) = softmax_cross_entropy(&logits, label).unwrap();
        prop_assert!(loss >= 0.0);
        prop_assert!(grad.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn mlp_forward_is_deterministic(seed in any::<u64>(), input in prop::collection::vec(-3.0f64..3.0, 5)) {
        let net = random_filter(&mut seeded(seed), &[5, 9, 4], 0.01);
        let a = net.eval(&input).unwrap();
        let b = net.clone().eval(&input).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        for (x, y) in a.iter().zip(naive_mlp(&net, &input)) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn parameter_count_unchanged_by_passes(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let filter = random_filter(&mut rng, &[4, 6, 3], 0.01);
        let mut layer = GenConvLayer::new(filter, 2, 4, 0.5, Activation::leaky(0.01)).unwrap();
        let before = layer.parameter_count();
        let cloud = random_cloud(&mut rng, 30, 2, 1, 1.0);
        let y = layer.forward(&cloud, &mut rng).unwrap();
        let (grads, _) = layer.backward(&Matrix::from_vec(y.len(), y.width(), vec![1.0; y.len() * y.width()]).unwrap()).unwrap();
        prop_assert_eq!(layer.parameter_count(), before);
        prop_assert_eq!(grads.flatten().len(), before);
    }

    #[test]
    fn toy_geometry_at_zero_jitter(seed in any::<u64>(), n in 8usize..300, size in 0.1f64..5.0, cx in -3.0f64..3.0, cy in -3.0f64..3.0) {
        let circle = gen_toy_cloud::<f64>(ToyShape::Circle, n, [cx, cy], size, 0.0, seed).unwrap();
        let square = gen_toy_cloud::<f64>(ToyShape::Square, n, [cx, cy], size, 0.0, seed).unwrap();
        for i in 0..n {
            let c = circle.cloud.coords(i);
            prop_assert!((((c[0] - cx).powi(2) + (c[1] - cy).powi(2)).sqrt() - size).abs() <= 1e-6);
            let q = square.cloud.coords(i);
            prop_assert!(((q[0] - cx).abs().max((q[1] - cy).abs()) - size / 2.0).abs() <= 1e-6);
        }
        prop_assert_eq!(circle.cloud.feature_dims(), 0);
    }

    #[test]
    fn normalize_idempotent_and_similarity_invariant(seed in any::<u64>(), n in 1usize..100, scale in 0.1f64..10.0, shift in prop::collection::vec(-20.0f64..20.0, 3)) {
        let mut rng = seeded(seed);
        let s = rng.random_range(2..=3);
        let cloud = random_cloud(&mut rng, n, s, 1, 1.0);
        let once = normalize_cloud(&cloud);
        let twice = normalize_cloud(&once);
        let mut scaled = cloud.clone();
        for i in 0..n {
            for (a, c) in scaled.coords_mut(i).iter_mut().enumerate() {
                *c = *c * scale + shift[a];
            }
        }
        let other = normalize_cloud(&scaled);
        for i in 0..n {
            for a in 0..s {
                prop_assert!((once.coords(i)[a] - twice.coords(i)[a]).abs() <= 1e-6);
                prop_assert!((once.coords(i)[a] - other.coords(i)[a]).abs() <= 1e-6);
            }
            prop_assert_eq!(once.features(i), cloud.features(i));
        }
        let max_norm = (0..n).map(|i| once.coords(i).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!(n == 1 || (max_norm - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn mesh_samples_lie_on_surface(seed in any::<u64>(), faces in 1usize..6, n in 1usize..300) {
        let mut rng = seeded(seed);
        let vertices: Vec<[f64; 3]> = (0..faces * 3).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let tris: Vec<[usize; 3]> = (0..faces).map(|f| [3 * f, 3 * f + 1, 3 * f + 2]).collect();
        let mesh = TriangleMesh::new(vertices, tris).unwrap();
        let cloud = sample_mesh::<f64>(&mesh, n, seed).unwrap();
        prop_assert_eq!(cloud.len(), n);
        for i in 0..n {
            let c = cloud.coords(i);
            let p = [c[0], c[1], c[2]];
            let dist = (0..faces)
                .map(|f| {
                    let q = closest_on_triangle(p, mesh.triangle(f));
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!(dist <= 1e-6, "point {} is {} from the surface", i, dist);
        }
    }

    #[test]
    fn pcld_round_trip(seed in any::<u64>(), n in 1usize..50, label in 0usize..1000) {
        let mut rng = seeded(seed);
        let (s, d) = (rng.random_range(2..=3), rng.random_range(0..=4));
        let cloud = random_cloud(&mut rng, n, s, d, 5.0).cast::<f32>();
        let item = LabeledCloud { cloud: cloud.clone(), label, class_name: "x".into() };
        let mut bytes = Vec::new();
        write_pcld(&mut bytes, &item).unwrap();
        prop_assert_eq!(bytes.len(), 4 + 2 + 1 + 1 + 4 + 4 * n * (s + d) + 2);
        let (back, back_label) = read_pcld(&bytes[..]).unwrap();
        prop_assert_eq!(back, cloud);
        prop_assert_eq!(back_label, label);
    }

    #[test]
    fn probe_at_origin_matches_filter(seed in any::<u64>(), d in 0usize..3, half in 1usize..6) {
        let net = random_filter(&mut seeded(seed), &[2 + 1 + d, 8, 3], 0.01);
        let res = 2 * half + 1;
        let img = probe_filter(&net, 2, 1, 0.7, res, None).unwrap();
        let mut input = vec![0.0, 0.0, 0.0];
        input.extend(std::iter::repeat_n(1.0, d));
        prop_assert_eq!(img.get(0, half, half), net.eval(&input).unwrap()[1]);
    }
}
