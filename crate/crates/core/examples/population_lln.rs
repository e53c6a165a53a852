// The whole population above criticality: the set below f_c keeps
// emptying, while a window above f_c fills at a constant rate.
//
// cargo run --release --example population_lln

use extinction_lab::fitness_model::FitnessDistribution;
use extinction_lab::simulator::{self, MarkStream};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (lambda, mu) = (2.0, 1.0);
    let dist = FitnessDistribution::uniform(0.0, 1.0)?;
    let window = (0.6, 0.8);
    let t_end = 2_000.0;
    let mass = dist.cdf(window.1) - dist.cdf(window.0);

    for seed in 0..4u64 {
        let mut stream = MarkStream::new(seed, 0, lambda + mu)?;
        let obs = simulator::observe_population(lambda, mu, &dist, t_end, window, 4, &mut stream)?;
        println!(
            "seed {seed}: f_c = {}, window count / t = {:.4}, per event = {:.4}, L emptied {} times, |L| trace {:?}",
            obs.critical_fitness,
            obs.r_window_count as f64 / t_end,
            obs.r_window_count as f64 / obs.events as f64,
            obs.empty_l_episodes,
            obs.l_trace.iter().map(|p| p.1).collect::<Vec<_>>(),
        );
    }
    println!(
        "lambda (F(b) - F(a)) = {:.4}; divided by lambda + mu = {:.4}",
        lambda * mass,
        lambda * mass / (lambda + mu)
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
