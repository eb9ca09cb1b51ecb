// The three learner families on the same encoded data.

use rashomon_core::dataset::{one_hot_encode, stratified_split, synth_generate, PlantedSpec};
use rashomon_core::ensembles::{fit_forest, fit_gbdt_traced, ForestParams, GbdtParams, Growth, Payload};
use rashomon_core::trees::{fit_tree, TreeParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("a", 1.0), ("b", 0.6), ("c", 0.0)]);
    let split = stratified_split(&synth_generate(800, &spec, 3)?, 0.25, 1)?;
    let (train, valid) = (one_hot_encode(&split.train), one_hot_encode(&split.valid));

    let tree = fit_tree(&train, TreeParams { max_depth: 4, ..TreeParams::default() }, 0)?;
    println!("tree: depth {}, {} leaves", tree.depth(), tree.n_leaves());
    let tree_acc = Payload::Tree(tree).accuracy(&valid)?;

    let forest = fit_forest(
        &train,
        &ForestParams { n_trees: 25, max_depth: 5, min_samples_leaf: 2, feature_fraction: 0.6, bootstrap: true, seed: 9 },
    )?;
    let forest_acc = Payload::Forest(forest).accuracy(&valid)?;

    for growth in [Growth::Depthwise { max_depth: 3 }, Growth::Leafwise { max_leaves: 8 }] {
        let p = GbdtParams { n_rounds: 40, learning_rate: 0.1, growth, min_samples_leaf: 2, l2_reg: 1.0, seed: 0 };
        let (model, trace) = fit_gbdt_traced(&train, &p)?;
        println!(
            "{:?}: train log-loss {:.4} -> {:.4}, valid accuracy {:.4}",
            growth,
            trace[0],
            trace[trace.len() - 1],
            Payload::Gbdt(model).accuracy(&valid)?
        );
    }
    println!("tree accuracy {tree_acc:.4}, forest accuracy {forest_acc:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("learners example failed");
}
