// Large-time behaviour of the survival tail: exponential decay with a
// t^(-3/2) prefactor off criticality, t^(-1/2) at criticality.
//
// cargo run --example asymptotic_regimes

use extinction_lab::survival_law::SurvivalLaw;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sub = SurvivalLaw::new(0.5, 1.0, 1)?;
    println!(
        "subcritical: gamma = {:.6}, C_1 = {:.6}",
        sub.gamma(),
        sub.asymptotic_constant().unwrap()
    );
    for gt in [5.0, 20.0, 50.0, 200.0] {
        let t = gt / sub.gamma();
        let ratio = sub.tail_integral(t)? / sub.asymptotic_excess(t);
        println!("  gamma t = {gt:>5}: exact / asymptotic = {ratio:.6}");
    }

    let sup = SurvivalLaw::new(1.5, 1.0, 1)?;
    let t = 40.0 / sup.gamma();
    println!(
        "supercritical: defect {:.6}; at gamma t = 40, excess tail {:.4e} vs asymptotic {:.4e}",
        sup.defect(),
        sup.tail_integral(t)?,
        sup.asymptotic_excess(t)
    );

    let crit = SurvivalLaw::new(1.0, 1.0, 2)?;
    for t in [1e2, 1e3, 1e4] {
        let scaled = (std::f64::consts::PI * t).sqrt() * crit.survival_tail(t)? / 2.0;
        println!("critical k=2: sqrt(pi mu t) P(tau > t) / k at t = {t:e}: {scaled:.6}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
