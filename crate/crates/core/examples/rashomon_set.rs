// Reference model, epsilon-Rashomon set, summary and epsilon sweep.

use rashomon_core::dataset::{stratified_split, synth_generate, PlantedSpec};
use rashomon_core::rashomon::{epsilon_sweep, extract_rashomon, rashomon_summary};
use rashomon_core::search::{build_model_space, ParamSpace, SearchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("a", 1.0), ("b", 0.5), ("c", 0.0)]);
    let split = stratified_split(&synth_generate(600, &spec, 4)?, 0.25, 4)?;
    let space = build_model_space(
        &SearchConfig { n_random: 16, bayes: None },
        &ParamSpace::default(),
        &split,
        8,
        "example",
    )?;
    let set = extract_rashomon(&space, 0.05)?;
    let s = rashomon_summary(&space, &set)?;
    println!(
        "reference #{} ({:.4}); space {:.4} +- {:.4} (n={}); set {:.4} +- {:.4} (n={})",
        s.reference_id, s.reference_accuracy, s.space_mean, s.space_sd, s.space_size, s.set_mean, s.set_sd, s.set_size
    );
    for (eps, size) in epsilon_sweep(&space, &[0.0, 0.01, 0.02, 0.05, 0.1, 0.2])? {
        println!("  epsilon {eps:<5} -> {size} members");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("rashomon example failed");
}
