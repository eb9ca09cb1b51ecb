mod common;

use common::{brute_force_best, random_matrix, rng};
use rand::seq::SliceRandom;
use rand::Rng;
use rashomon_core::dataset::EncodedMatrix;
use rashomon_core::ensembles::{
    fit_forest, fit_gbdt, fit_gbdt_traced, fit_payload, ForestParams, GbdtParams, Growth, ModelParams, Payload,
};
use rashomon_core::trees::{fit_tree, Impurity, TreeParams};

/// Straightforward recursive CART: returns the leaf distribution per row.
fn naive_tree(m: &EncodedMatrix, rows: &[usize], p: &TreeParams, depth: usize, out: &mut [Vec<f64>]) -> usize {
    let split = if depth >= p.max_depth || rows.len() < p.min_samples_split {
        None
    } else {
        brute_force_best(m, rows, &(0..m.n_cols()).collect::<Vec<_>>(), p.impurity, p.min_samples_leaf)
    };
    match split {
        None => {
            let mut dist = vec![0.0; m.n_classes()];
            for &r in rows {
                dist[m.labels()[r]] += 1.0 / rows.len() as f64;
            }
            for &r in rows {
                out[r] = dist.clone();
            }
            1
        }
        Some((c, _)) => {
            let (right, left): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| m.get(r, c) == 1);
            1 + naive_tree(m, &left, p, depth + 1, out) + naive_tree(m, &right, p, depth + 1, out)
        }
    }
}

fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.iter().zip(y).all(|(u, v)| (u - v).abs() <= tol))
}

#[test]
fn fit_tree_matches_naive_grower() {
    let mut rng = rng(5);
    for case in 0..150 {
        let (n, c, k) = (rng.gen_range(2..60), rng.gen_range(1..7), rng.gen_range(2..4));
        let m = random_matrix(&mut rng, n, c, k);
        let p = TreeParams {
            max_depth: rng.gen_range(1..6),
            min_samples_leaf: rng.gen_range(1..4),
            min_samples_split: rng.gen_range(2..8),
            impurity: if rng.gen_bool(0.5) { Impurity::Gini } else { Impurity::Entropy },
        };
        let tree = fit_tree(&m, p, 0).unwrap();
        let mut want = vec![Vec::new(); n];
        let nodes = naive_tree(&m, &(0..n).collect::<Vec<_>>(), &p, 0, &mut want);
        assert_eq!(tree.nodes.len(), nodes, "case {case}");
        let got = tree.predict(&m).unwrap();
        assert!(close(&got, &want, 1e-12), "case {case}");
        assert!(tree.depth() <= p.max_depth);
    }
}

#[test]
fn single_unbagged_forest_equals_tree() {
    let mut rng = rng(6);
    for _ in 0..30 {
        let m = random_matrix(&mut rng, 50, 6, 3);
        let fp = ForestParams { n_trees: 1, max_depth: 4, min_samples_leaf: 2, feature_fraction: 1.0, bootstrap: false, seed: 1 };
        let tp = TreeParams { max_depth: 4, min_samples_leaf: 2, ..TreeParams::default() };
        let f = Payload::Forest(fit_forest(&m, &fp).unwrap()).predict(&m).unwrap();
        let t = Payload::Tree(fit_tree(&m, tp, 0).unwrap()).predict(&m).unwrap();
        assert!(close(&f, &t, 1e-12));
    }
}

#[test]
fn forest_prediction_ignores_tree_order() {
    let mut rng = rng(7);
    let m = random_matrix(&mut rng, 80, 8, 3);
    let fp = ForestParams { n_trees: 15, max_depth: 5, min_samples_leaf: 1, feature_fraction: 0.5, bootstrap: true, seed: 4 };
    let forest = fit_forest(&m, &fp).unwrap();
    let mut shuffled = forest.clone();
    shuffled.trees.shuffle(&mut rng);
    let a = Payload::Forest(forest).predict(&m).unwrap();
    let b = Payload::Forest(shuffled).predict(&m).unwrap();
    assert!(close(&a, &b, 1e-12));
}

#[test]
fn forest_fit_is_seed_deterministic() {
    let m = random_matrix(&mut rng(8), 60, 5, 2);
    let fp = ForestParams { n_trees: 10, max_depth: 3, min_samples_leaf: 1, feature_fraction: 0.4, bootstrap: true, seed: 9 };
    assert_eq!(fit_forest(&m, &fp).unwrap(), fit_forest(&m, &fp).unwrap());
}

#[test]
fn gbdt_degenerate_equivalences() {
    common::check_gbdt_degenerate(60, 9).unwrap();
}

#[test]
fn gbdt_training_loss_does_not_increase() {
    let mut rng = rng(10);
    for case in 0..20 {
        let k = rng.gen_range(2..4);
        let m = random_matrix(&mut rng, 80, 6, k);
        for growth in [Growth::Depthwise { max_depth: 3 }, Growth::Leafwise { max_leaves: 6 }] {
            let p = GbdtParams { n_rounds: 25, learning_rate: 0.1, growth, min_samples_leaf: 1, l2_reg: 1.0, seed: 0 };
            let (_, trace) = fit_gbdt_traced(&m, &p).unwrap();
            assert_eq!(trace.len(), 26);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "case {case} {growth:?}: {trace:?}");
            }
        }
    }
}

#[test]
fn probabilities_are_normalised_for_every_family() {
    let mut rng = rng(11);
    for k in 2..4 {
        let m = random_matrix(&mut rng, 70, 7, k);
        let params = [
            ModelParams::Tree(TreeParams::default()),
            ModelParams::Forest(ForestParams { n_trees: 7, max_depth: 4, min_samples_leaf: 1, feature_fraction: 0.6, bootstrap: true, seed: 2 }),
            ModelParams::Gbdt(GbdtParams { n_rounds: 12, learning_rate: 0.3, growth: Growth::Depthwise { max_depth: 3 }, min_samples_leaf: 1, l2_reg: 1.0, seed: 0 }),
            ModelParams::Gbdt(GbdtParams { n_rounds: 12, learning_rate: 0.3, growth: Growth::Leafwise { max_leaves: 5 }, min_samples_leaf: 1, l2_reg: 1.0, seed: 0 }),
        ];
        for p in &params {
            let payload = fit_payload(&m, p, 3).unwrap();
            for row in payload.predict(&m).unwrap() {
                assert_eq!(row.len(), k);
                assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{p:?}: {row:?}");
            }
        }
    }
}

#[test]
fn gbdt_zero_rounds_is_the_prior() {
    let m = random_matrix(&mut rng(12), 40, 3, 3);
    let g = fit_gbdt(&m, &GbdtParams { n_rounds: 0, learning_rate: 0.1, growth: Growth::Depthwise { max_depth: 2 }, min_samples_leaf: 1, l2_reg: 1.0, seed: 0 });
    let payload = Payload::Gbdt(g.unwrap());
    let first = payload.predict_row(m.row(0)).unwrap();
    for i in 0..m.n_rows() {
        assert_eq!(payload.predict_row(m.row(i)).unwrap(), first);
    }
}
