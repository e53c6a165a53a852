//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run_example().expect("example should run");
        }
    };
}

example!(bessel_functions);
example!(fitness_distributions);
example!(survival_law);
example!(asymptotic_regimes);
example!(simulate_survival);
example!(coupling);
example!(population_lln);
example!(validate_pipeline);
example!(mean_survival);
