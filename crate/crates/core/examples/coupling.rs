// The full process and a simple random walk driven by the same marks: the
// number of living fitnesses at or below the tagged one is the walk.
//
// cargo run --example coupling

use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};
use extinction_lab::simulator::{self, Mark, MarkStream, ScriptedMarks};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dist = FitnessDistribution::uniform(0.0, 1.0)?;

    // Hand-written marks: a birth at height 0.3 (fitness 0.15 <= f), a birth
    // above f, then two deaths.
    let params = ModelParams::new(2.0, 1.0, dist.clone(), 1, 0.5)?;
    let marks = [(0.1, 0.3), (0.2, 1.5), (0.3, 2.5), (0.4, 2.9)]
        .map(|(wait, height)| Mark { wait, height });
    let mut scripted = ScriptedMarks::new(marks);
    let run = simulator::run_coupled(&params, 10.0, 100, &mut scripted)?;
    println!(
        "scripted: tagged {:?}, walk {:?}, agreed {}",
        run.tagged.outcome,
        run.walk.outcome,
        run.agreed()
    );

    let mut agreed = 0;
    for seed in 0..200u64 {
        let k = 1 + (seed % 5) as u32;
        let p = ModelParams::new(2.0, 1.0, dist.clone(), k, 0.3 + 0.1 * (seed % 5) as f64)?;
        let mut stream = MarkStream::for_model(seed, 0, &p)?;
        agreed += simulator::coupled_equality_check(&p, f64::MAX, 10_000, &mut stream)? as u32;
    }
    println!("random: {agreed} of 200 seeds agree event by event");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
