// Importance rankings, Kendall's tau against the reference and VIOD.

use rashomon_core::dataset::{one_hot_encode, stratified_split, synth_generate, PlantedSpec};
use rashomon_core::discrepancy::{kendall_tau, rank_variables, tau_distribution, viod, Ranking, ViodMode};
use rashomon_core::importance::{pvi_over_set, PviConfig};
use rashomon_core::rashomon::extract_rashomon;
use rashomon_core::search::{build_model_space, ParamSpace, SearchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let order = |v: &[&str]| Ranking { order: v.iter().map(|s| s.to_string()).collect(), model_id: 0, tie_note: false };
    let a = order(&["a", "b", "c", "d", "e", "f"]);
    let b = order(&["a", "b", "d", "c", "e", "f"]);
    println!("one adjacent swap of six: tau = {:.4}", kendall_tau(&a, &b)?);

    let spec = PlantedSpec::uniform(3, &[("s1", 0.9), ("s2", 0.7), ("s3", 0.2), ("n1", 0.0)]);
    let split = stratified_split(&synth_generate(800, &spec, 8)?, 0.25, 8)?;
    let space = build_model_space(
        &SearchConfig { n_random: 12, bayes: None },
        &ParamSpace::default(),
        &split,
        5,
        "example",
    )?;
    let set = extract_rashomon(&space, 0.05)?;
    let report = pvi_over_set(&set, &space, &one_hot_encode(&split.valid), &PviConfig { repeats: 5, seed: 2 }, "SYN", "multiclass")?;
    let reference = rank_variables(&report.for_model(set.reference_id), &report.variables)?;
    println!("reference #{} ranking {:?}", set.reference_id, reference.order);
    for (id, tau) in tau_distribution(&report, &set)? {
        println!("  member #{id:<3} tau {tau:+.4}");
    }
    if set.len() > 1 {
        let v = viod(&report, &set, ViodMode::Min)?;
        println!("VIOD min {:+.4} (#{}), max {:+.4} (#{})", v.viod_min, v.argmin_id, v.viod_max, v.argmax_id);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("discrepancy example failed");
}
