// Exact event-driven simulation of the species process and the survival
// time of a tagged species, compared with the analytic tail.
//
// cargo run --release --example simulate_survival

use extinction_lab::experiments::stats;
use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};
use extinction_lab::simulator::{self, MarkStream};
use extinction_lab::survival_law::SurvivalLaw;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dist = FitnessDistribution::uniform(0.0, 1.0)?;
    let params = ModelParams::new(2.0, 1.0, dist, 1, 0.25)?;
    let law = SurvivalLaw::from_params(&params)?;

    // One path, reproducible from (seed, stream index).
    let mut stream = MarkStream::for_model(42, 0, &params)?;
    let one = simulator::simulate_survival_time(&params, 100.0, &mut stream)?;
    println!(
        "seed 42, run 0: {:?} after {} events",
        one.outcome, one.events_consumed
    );

    let horizon = 100.0;
    let samples = simulator::sample_survival_batch(&params, horizon, 42, 20_000)?;
    println!(
        "{:>5} {:>10} {:>10} {:>22}",
        "t", "analytic", "empirical", "95% CI"
    );
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let e = stats::empirical_tail(&samples, t)?;
        println!(
            "{t:>5} {:>10.5} {:>10.5}   [{:.5}, {:.5}]",
            law.survival_tail(t)?,
            e.estimate,
            e.ci.lo,
            e.ci.hi
        );
    }
    let ks = stats::ks_against_law(&samples, &law, horizon, 0.01)?;
    println!(
        "KS D = {:.5}, critical {:.5}, passed {}",
        ks.statistic, ks.critical_value, ks.passed
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
