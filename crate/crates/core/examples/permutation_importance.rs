// Permutation variable importance for every Rashomon-set member.

use rashomon_core::dataset::{one_hot_encode, stratified_split, synth_generate, PlantedSpec};
use rashomon_core::importance::{pvi_over_set, summarize, PviConfig};
use rashomon_core::rashomon::extract_rashomon;
use rashomon_core::search::{build_model_space, ParamSpace, SearchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("strong", 1.0), ("medium", 0.5), ("noise", 0.0)]);
    let split = stratified_split(&synth_generate(800, &spec, 6)?, 0.25, 6)?;
    let space = build_model_space(
        &SearchConfig { n_random: 8, bayes: None },
        &ParamSpace::default(),
        &split,
        3,
        "example",
    )?;
    let set = extract_rashomon(&space, 0.05)?;
    let valid = one_hot_encode(&split.valid);
    let report = pvi_over_set(&set, &space, &valid, &PviConfig { repeats: 5, seed: 1 }, "SYN", "multiclass")?;
    println!("{} members, {} records", set.len(), report.records.len());
    for v in summarize(&report) {
        println!("  {:<8} median {:+.4}  [{:+.4}, {:+.4}]", v.variable, v.median, v.min, v.max);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("importance example failed");
}
