// Modified Bessel functions of the first kind: plain, scaled and logarithmic
// evaluation, plus the large-argument bracket.
//
// cargo run --example bessel_functions

use extinction_lab::special_functions::{
    bessel_bounds, bessel_i, bessel_i_eval, bessel_i_scaled, ln_bessel_i_scaled, DEFAULT_REL_TOL,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (k, x) in [(0, 1.0), (1, 1.0), (2, 5.0), (5, 10.0)] {
        let e = bessel_i_eval(k, x, DEFAULT_REL_TOL)?;
        println!(
            "I_{k}({x}) = {:.16e}  ({} terms, est. rel. error {:.1e})",
            e.value, e.terms_used, e.est_rel_error
        );
    }

    // I_1(800) overflows a double; the scaled and log forms do not.
    let x = 800.0;
    println!("I_1({x}) -> {:?}", bessel_i(1, x, DEFAULT_REL_TOL).err());
    println!(
        "e^-x I_1({x}) = {:.16e}",
        bessel_i_scaled(1, x, DEFAULT_REL_TOL)?
    );
    println!(
        "ln I_1({x}) = {:.12}",
        ln_bessel_i_scaled(1, x, DEFAULT_REL_TOL)? + x
    );

    for k in [1, 2, 5] {
        let x = 50.0;
        let (lo, hi) = bessel_bounds(k, x)?;
        let v = bessel_i_scaled(k, x, DEFAULT_REL_TOL)?;
        let inside = lo <= v && v <= hi;
        println!("k={k} x={x}: {lo:.10} <= {v:.10} <= {hi:.10} ? {inside}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
