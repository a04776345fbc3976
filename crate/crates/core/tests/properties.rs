use noisyknn::bounds::plugin_error_bound;
use noisyknn::knn::{estimate_max, estimate_min, KnnRegressor, NoiseRates, RegressionSample, RobustKnnModel};
use noisyknn::nn_index::euclidean;
use noisyknn::{Index, Metric, PointSet};
use proptest::prelude::*;

fn points_strategy(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    // Coarse grid values force plenty of exact distance ties.
    prop::collection::vec(prop::collection::vec((0i32..8).prop_map(|v| v as f64 * 0.25), dim), 1..max_n)
}

fn brute_force(points: &[Vec<f64>], q: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (euclidean(p, q), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    (all.iter().map(|e| e.1).collect(), all.iter().map(|e| e.0).collect())
}

fn line_sample(xs: &[f64], labels: &[u8]) -> RegressionSample {
    RegressionSample::from_labels(PointSet::from_line(xs).unwrap(), labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accelerated_index_matches_sorting(
        dim in 1usize..4,
        seed_points in points_strategy(60, 3),
        query in prop::collection::vec(-0.5f64..2.5, 3),
        k_frac in 0.0f64..1.0,
    ) {
        let pts: Vec<Vec<f64>> = seed_points.iter().map(|p| p[..dim].to_vec()).collect();
        let q = &query[..dim];
        let k = 1 + ((pts.len() - 1) as f64 * k_frac) as usize;
        let index = Index::build(PointSet::from_rows(&pts).unwrap(), Metric::Euclidean);
        let found = index.knn_query(q, k).unwrap();
        let (idx, dist) = brute_force(&pts, q, k);
        prop_assert_eq!(&found.indices, &idx);
        prop_assert_eq!(&found.distances, &dist);
        let brute = Index::brute_force(PointSet::from_rows(&pts).unwrap(), Metric::Euclidean);
        prop_assert_eq!(brute.knn_query(q, k).unwrap().indices, idx);
    }

    #[test]
    fn smaller_k_is_a_prefix(pts in points_strategy(40, 2), q in prop::collection::vec(0.0f64..2.0, 2)) {
        let index = Index::build(PointSet::from_rows(&pts).unwrap(), Metric::Euclidean);
        let full = index.knn_query(&q, pts.len()).unwrap();
        for k in 1..=pts.len() {
            let part = index.knn_query(&q, k).unwrap();
            prop_assert_eq!(&part.indices[..], &full.indices[..k]);
        }
    }

    #[test]
    fn predictions_ignore_point_order(
        xs in prop::collection::vec(0.0f64..1.0, 2..50),
        labels_seed in prop::collection::vec(0u8..2, 50),
        shift in 1usize..49,
        q in 0.0f64..1.0,
        k_frac in 0.0f64..1.0,
    ) {
        let n = xs.len();
        let labels = &labels_seed[..n];
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let xs_p: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        let labels_p: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        let a = KnnRegressor::fit(line_sample(&xs, labels), k, Metric::Euclidean).unwrap();
        let b = KnnRegressor::fit(line_sample(&xs_p, &labels_p), k, Metric::Euclidean).unwrap();
        // Distinct distances make the neighbour set order-free.
        let mut d: Vec<f64> = xs.iter().map(|x| (x - q).abs()).collect();
        d.sort_by(f64::total_cmp);
        prop_assume!(k == n || d[k - 1] < d[k]);
        prop_assert!((a.predict(&[q]).unwrap() - b.predict(&[q]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fast_fitted_path_matches_queries(
        xs in prop::collection::vec(0.0f64..1.0, 1..80),
        labels_seed in prop::collection::vec(0u8..2, 80),
        k_frac in 0.0f64..1.0,
    ) {
        let n = xs.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let reg = KnnRegressor::fit(line_sample(&xs, &labels_seed[..n]), k, Metric::Euclidean).unwrap();
        let fitted = reg.fitted_values();
        for (i, x) in xs.iter().enumerate() {
            prop_assert_eq!(fitted[i], reg.predict(&[*x]).unwrap());
        }
        let custom = KnnRegressor::fit(
            line_sample(&xs, &labels_seed[..n]),
            k,
            Metric::custom(|a, b| (a[0] - b[0]).abs()),
        ).unwrap();
        prop_assert_eq!(custom.fitted_values(), fitted);
    }

    #[test]
    fn max_is_one_minus_min_of_complement(
        pts in points_strategy(50, 2),
        labels_seed in prop::collection::vec(0u8..2, 50),
        k_frac in 0.0f64..1.0,
    ) {
        let n = pts.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let s = RegressionSample::from_labels(PointSet::from_rows(&pts).unwrap(), &labels_seed[..n]).unwrap();
        let max = estimate_max(s.clone(), k, Metric::Euclidean).unwrap();
        let min_c = estimate_min(s.complemented(), k, Metric::Euclidean).unwrap();
        prop_assert!((max - (1.0 - min_c)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_rates_keep_the_half_threshold(p in 0.0f64..0.49) {
        prop_assert_eq!(NoiseRates::new(p, p).unwrap().threshold(), 0.5);
    }

    #[test]
    fn plugin_error_bound_holds(
        eta in 0.0f64..1.0,
        p0 in 0.0f64..0.3,
        p1 in 0.0f64..0.3,
        e in -0.05f64..0.05,
        e0 in -0.05f64..0.05,
        e1 in -0.05f64..0.05,
    ) {
        let tilde = (1.0 - p0 - p1) * eta + p0;
        let (q0, q1) = ((p0 + e0).clamp(0.0, 0.49), (p1 + e1).clamp(0.0, 0.49));
        let (d0, d1) = (q0 - p0, q1 - p1);
        let estimate = ((tilde + e) - q0) / (1.0 - q0 - q1);
        let bound = plugin_error_bound(e.abs(), d0.abs(), d1.abs(), p0, p1).unwrap();
        prop_assert!((estimate - eta).abs() <= bound + 1e-12, "{} > {}", (estimate - eta).abs(), bound);
    }

    #[test]
    fn shifting_labels_up_never_lowers_predictions(
        xs in prop::collection::vec(0.0f64..1.0, 2..40),
        labels_seed in prop::collection::vec(0u8..2, 40),
        flip in 0usize..40,
        q in 0.0f64..1.0,
    ) {
        let n = xs.len();
        let labels = labels_seed[..n].to_vec();
        let mut raised = labels.clone();
        raised[flip % n] = 1;
        let k = (n / 3).max(1);
        let a = RobustKnnModel::standard(KnnRegressor::fit(line_sample(&xs, &labels), k, Metric::Euclidean).unwrap());
        let b = RobustKnnModel::standard(KnnRegressor::fit(line_sample(&xs, &raised), k, Metric::Euclidean).unwrap());
        prop_assert!(b.predict(&[q]).unwrap() >= a.predict(&[q]).unwrap());
        prop_assert!(b.classify(&[q]).unwrap() >= a.classify(&[q]).unwrap());
    }
}
