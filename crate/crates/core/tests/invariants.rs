//! Structural and behavioural invariants of trees, scores and explanations.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use isoexplain::explain::ours_tree_contribution;
use isoexplain::forest::{depth_limit, Edge};
use isoexplain::rng::stream_rng;
use isoexplain::synthbench::anomalize;
use isoexplain::{
    explain_diffi_local, explain_ours, fit_forest, split_score, Dataset, IsolationForest, TreeNode,
};

fn normal_data(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, 0);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    Dataset::from_rows(rows).unwrap()
}

fn check_node(node: &TreeNode, depth: usize, limit: usize, d: usize) {
    match node {
        TreeNode::Leaf { size, depth: at } => {
            assert_eq!(*at, depth);
            assert!(*size >= 1);
            assert!(depth <= limit);
        }
        TreeNode::Internal {
            feature,
            size,
            left,
            right,
            ..
        } => {
            assert!(*feature < d);
            assert_eq!(*size, left.size() + right.size());
            assert!(left.size() >= 1 && right.size() >= 1);
            check_node(left, depth + 1, limit, d);
            check_node(right, depth + 1, limit, d);
        }
    }
}

fn edges(forest: &IsolationForest, x: &[f64]) -> Vec<(usize, Vec<Edge>)> {
    forest
        .trees()
        .iter()
        .map(|t| {
            let mut path = Vec::new();
            let p = t.route(x, |e| path.push(e));
            (p.depth, path)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trees_respect_structure(
        n in 2usize..400,
        d in 1usize..6,
        psi in 2usize..300,
        t in 1usize..8,
        seed in any::<u64>(),
    ) {
        let data = normal_data(n, d, seed);
        let forest = fit_forest(&data, t, psi, seed).unwrap();
        let limit = depth_limit(psi.min(n));
        for tree in forest.trees() {
            prop_assert_eq!(tree.sample_size(), psi.min(n));
            prop_assert!(tree.root().max_depth() <= limit);
            check_node(tree.root(), 0, limit, d);
        }
    }

    #[test]
    fn tree_sums_telescope(
        n in 2usize..300,
        d in 1usize..5,
        psi in 2usize..256,
        seed in any::<u64>(),
        probe in prop::collection::vec(-8.0f64..8.0, 5),
    ) {
        let data = normal_data(n, d, seed);
        let forest = fit_forest(&data, 5, psi, seed).unwrap();
        let x = &probe[..d];
        for tree in forest.trees() {
            let sum: f64 = ours_tree_contribution(tree, x).unwrap().iter().sum();
            let p = tree.path_length(x).unwrap();
            let expected = (tree.sample_size() as f64 / p.leaf_size as f64).log2() - p.depth as f64;
            prop_assert!((sum - expected).abs() <= 1e-9, "{} vs {}", sum, expected);
        }
    }

    #[test]
    fn split_score_range(parent in 2usize..100_000, frac in 0.0f64..1.0) {
        let child = 1 + ((parent - 2) as f64 * frac) as usize;
        let s = split_score(parent, child).unwrap();
        prop_assert!(s > -1.0);
        prop_assert!(s <= (parent as f64).log2() - 1.0 + 1e-12);
    }

    #[test]
    fn smaller_child_earns_more(parent in 3usize..10_000, a in 1usize..10_000, b in 1usize..10_000) {
        let (a, b) = (a.min(parent - 1), b.min(parent - 1));
        prop_assume!(a < b);
        prop_assert!(split_score(parent, a).unwrap() > split_score(parent, b).unwrap());
    }

    #[test]
    fn diffi_weight_is_constant_along_a_path(
        n in 4usize..300,
        d in 1usize..5,
        seed in any::<u64>(),
        probe in prop::collection::vec(-8.0f64..8.0, 5),
    ) {
        let data = normal_data(n, d, seed);
        let forest = fit_forest(&data, 1, 256, seed).unwrap();
        let x = &probe[..d];
        let (h, path) = edges(&forest, x).pop().unwrap();
        let w = explain_diffi_local(&forest, x).unwrap();
        if h > 0 {
            let per_edge = 1.0 / h as f64 - 1.0 / (forest.trees()[0].sample_size() as f64).log2();
            let mut expected = vec![0.0; d];
            for e in &path {
                expected[e.feature] += per_edge;
            }
            for (got, want) in w.weights.iter().zip(&expected) {
                prop_assert!((got - want).abs() <= 1e-12);
            }
        } else {
            prop_assert!(w.weights.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn extreme_attribute_is_the_argmax() {
    let data = normal_data(1000, 5, 3);
    let forest = fit_forest(&data, 100, 256, 3).unwrap();
    let max = data.column_max();
    let mut rng = stream_rng(77, 0);
    let mut hits = 0;
    for _ in 0..100 {
        let i = rng.random_range(0..data.n());
        let j = rng.random_range(0..data.d());
        let mut x = data.row(i).to_vec();
        x[j] = 10.0 * max[j].abs().max(1.0);
        if explain_ours(&forest, &x).unwrap().argmax() == Some(j) {
            hits += 1;
        }
    }
    assert!(hits >= 90, "argmax hit {hits}/100");
}

#[test]
fn far_outlier_isolates_faster_than_typical_point() {
    let data = normal_data(2000, 3, 5);
    let forest = fit_forest(&data, 100, 256, 5).unwrap();
    let mut scores: Vec<f64> = data
        .rows()
        .map(|x| forest.anomaly_score(x).unwrap())
        .collect();
    scores.sort_by(f64::total_cmp);
    let median = scores[scores.len() / 2];
    let outlier = forest.anomaly_score(&[10.0, 10.0, 10.0]).unwrap();
    assert!(outlier < median, "{outlier} vs median {median}");
}

#[test]
fn anomalized_attributes_gain_weight() {
    let data = normal_data(800, 4, 8);
    let forest = fit_forest(&data, 100, 256, 8).unwrap();
    let changed = [1usize].into_iter().collect();
    let x = anomalize(&data, 17, &changed, 3.0).unwrap();
    let before = explain_ours(&forest, data.row(17)).unwrap();
    let after = explain_ours(&forest, &x).unwrap();
    assert!(after.weights[1] > before.weights[1]);
    assert_abs_diff_eq!(
        after.weights.iter().sum::<f64>(),
        forest
            .trees()
            .iter()
            .map(|t| {
                let p = t.path_length(&x).unwrap();
                (t.sample_size() as f64 / p.leaf_size as f64).log2() - p.depth as f64
            })
            .sum::<f64>(),
        epsilon = 1e-9
    );
}
