// Random search plus Bayesian optimisation over all four families, then the
// model registry on disk.

use rashomon_core::dataset::{stratified_split, synth_generate, PlantedSpec};
use rashomon_core::search::{build_model_space, BayesConfig, ModelSpace, ParamSpace, SearchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("a", 1.0), ("b", 0.4), ("c", 0.0)]);
    let split = stratified_split(&synth_generate(500, &spec, 21)?, 0.25, 2)?;
    let config = SearchConfig { n_random: 8, bayes: Some(BayesConfig { n_iter: 2, n_init: 3 }) };
    let space = build_model_space(&config, &ParamSpace::default(), &split, 42, "example")?;
    println!("{} models (expected {})", space.len(), config.total(4));
    for m in space.models.iter().take(6) {
        println!("  #{:<3} {:<15} valid accuracy {:.4}", m.model_id, m.family.as_str(), m.valid_accuracy);
    }

    let dir = std::env::temp_dir().join(format!("rashomon-search-example-{}", std::process::id()));
    space.save(&dir)?;
    let back = ModelSpace::load(&dir)?;
    assert_eq!(back.accuracies(), space.accuracies());
    println!("registry round-trip ok: {}", dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("search example failed");
}
