// The `validate` experiment from code: simulate, gate against the analytic
// law and write CSV and JSON output.
//
// cargo run --release --example validate_pipeline

use extinction_lab::experiments::{run_experiment, Command, ExperimentConfig, Grid};
use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = tempfile::tempdir()?;
    let params = ModelParams::new(2.0, 1.0, FitnessDistribution::uniform(0.0, 1.0)?, 1, 0.25)?;
    let mut config = ExperimentConfig::new(Command::Validate, params, out.path());
    config.samples = 20_000;
    config.t_grid = Grid::values(vec![0.0, 1.0, 2.0, 4.0, 8.0])?;

    let report = run_experiment(&config)?;
    for check in &report.gate.as_ref().unwrap().checks {
        println!(
            "{}: {} ({})",
            check.name,
            if check.passed { "pass" } else { "fail" },
            check.detail
        );
    }
    println!("{}", std::fs::read_to_string(&report.csv_path)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
