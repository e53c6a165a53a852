// Mean survival time below criticality: the derivative of the moment
// generating function against a Monte Carlo estimate.
//
// cargo run --release --example mean_survival

use extinction_lab::experiments::MeanCheck;
use extinction_lab::simulator;
use extinction_lab::survival_law::SurvivalLaw;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let law = SurvivalLaw::new(0.5, 1.0, 1)?;
    println!("M(s) at s = 0, 1: {:.6}, {:.6}", law.mgf(0.0), law.mgf(1.0));
    println!("-k M'(0) = {:.6}", law.mean_survival().finite().unwrap());
    println!(
        "2 k mu / (mu - lambda_f) = {:.6}",
        law.doubled_mean_formula().unwrap()
    );

    let samples = simulator::sample_walk_batch(0.5, 1.0, 1, 1e4, 7, 100_000)?;
    let check = MeanCheck::evaluate(&samples, &law).unwrap();
    println!(
        "Monte Carlo {:.4} +- {:.4} (3 sigma): {}",
        check.monte_carlo.mean,
        3.0 * check.monte_carlo.std_error,
        check.verdict
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
