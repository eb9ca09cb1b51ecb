// Planted-signal data, target setups, stratified split and one-hot encoding.

use rashomon_core::dataset::{make_binary, one_hot_encode, stratified_split, synth_generate, PlantedSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("strong", 1.0), ("medium", 0.5), ("noise", 0.0)]);
    let data = synth_generate(600, &spec, 11)?;
    println!("{} rows, classes {:?} -> {:?}", data.len(), data.target_levels(), data.class_counts());

    let binary = make_binary(&data);
    println!("binary setup: {:?} -> {:?}", binary.target_levels(), binary.class_counts());

    let split = stratified_split(&binary, 0.25, 5)?;
    println!("train {} / valid {}", split.train.len(), split.valid.len());

    let m = one_hot_encode(&split.train);
    println!("{} one-hot columns: {:?}", m.n_cols(), m.column_names());
    for g in m.groups() {
        println!("  {} -> columns {:?}", g.name, g.columns);
    }
    assert_eq!(m.decode()[0], split.train.rows()[0].values);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("dataset example failed");
}
