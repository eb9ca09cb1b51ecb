// Full pipeline on a synthetic config, then `report` over the run directory.

use rashomon_core::dataset::PlantedSpec;
use rashomon_core::pipeline::{report, run_pipeline, RunOptions};
use rashomon_core::RunConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PlantedSpec::uniform(3, &[("strong", 1.0), ("medium", 0.5), ("noise", 0.0)]);
    let mut config = RunConfig::synthetic(600, spec.variables, 17);
    config.pvi_repeats = 3;
    config.output_dir = std::env::temp_dir().join(format!("rashomon-pipeline-example-{}", std::process::id()));

    let summary = run_pipeline(&config, &RunOptions::default())?;
    for s in &summary.setups {
        let r = s.summary_row();
        println!(
            "{:<10} {} set {}/{} mean {:.4} viod_min {:?}",
            r.setup.as_str(),
            r.course,
            r.set_size.unwrap_or(0),
            r.space_size.unwrap_or(0),
            r.set_mean.unwrap_or(f64::NAN),
            r.viod_min
        );
    }
    let again = report(&config.output_dir)?;
    assert_eq!(again.setups.len(), summary.setups.len());
    println!("artifacts in {}", config.output_dir.display());
    std::fs::remove_dir_all(&config.output_dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pipeline example failed");
}
