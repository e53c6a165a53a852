// Fitness laws from spec strings and tables, the effective birth rate of a
// tagged fitness and the critical fitness.
//
// cargo run --example fitness_distributions

use std::io::Write;

use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut table = tempfile::NamedTempFile::new()?;
    writeln!(table, "# x, F(x)")?;
    writeln!(table, "0.0, 0.0\n1.0, 0.2\n3.0, 1.0")?;
    let table_spec = format!("table:{}", table.path().display());

    for spec in ["uniform:0,1", "exp:2", table_spec.as_str()] {
        let dist: FitnessDistribution = spec.parse()?;
        let f = dist.quantile(0.4);
        let params = ModelParams::new(2.0, 1.0, dist.clone(), 1, f)?;
        println!(
            "{dist}: F({f:.4}) = {:.4}, lambda_f = {:.4} ({}), f_c = {:.4}",
            dist.cdf(f),
            params.effective_birth_rate(),
            params.regime(),
            params.critical_fitness().unwrap_or(f64::NAN),
        );
    }

    match "normal:0,1".parse::<FitnessDistribution>() {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
