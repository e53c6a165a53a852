// The analytic survival law in the three regimes, computed two independent
// ways: by quadrature of the Bessel density and by the Gamma-mixture series.
//
// cargo run --example survival_law

use extinction_lab::survival_law::SurvivalLaw;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (lambda_f, mu, k) in [(0.5, 1.0, 1), (1.0, 1.0, 2), (1.5, 1.0, 1)] {
        let law = SurvivalLaw::new(lambda_f, mu, k)?;
        println!(
            "lambda_f={lambda_f} mu={mu} k={k}: {} regime, defect {:.6}",
            law.regime(),
            law.defect()
        );
        println!(
            "{:>6} {:>20} {:>20} {:>10}",
            "t", "P(tau > t)", "series", "density"
        );
        for t in [0.1, 1.0, 5.0, 20.0] {
            let tail = law.survival_tail(t)?;
            let series = 1.0 - law.cdf_series(t, None)?;
            println!(
                "{t:>6} {tail:>20.15} {series:>20.15} {:>10.6}",
                law.density(t)?
            );
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
