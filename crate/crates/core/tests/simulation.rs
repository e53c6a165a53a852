//! Simulator against the analytic law and against itself.

use extinction_lab::experiments::stats;
use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};
use extinction_lab::simulator::{self, MarkStream};
use extinction_lab::survival_law::SurvivalLaw;

fn uniform_params(f: f64, k: u32) -> ModelParams {
    ModelParams::new(
        2.0,
        1.0,
        FitnessDistribution::uniform(0.0, 1.0).unwrap(),
        k,
        f,
    )
    .unwrap()
}

#[test]
fn subcritical_samples_pass_ks() {
    // lambda_f = 0.8, k = 2.
    let p = uniform_params(0.4, 2);
    let law = SurvivalLaw::from_params(&p).unwrap();
    let horizon = 400.0;
    let samples = simulator::sample_survival_batch(&p, horizon, 11, 100_000).unwrap();
    let ks = stats::ks_against_law(&samples, &law, horizon, 0.01).unwrap();
    assert!(ks.passed, "{ks:?}");
}

#[test]
fn supercritical_walk_passes_ks_on_finite_part() {
    let law = SurvivalLaw::new(1.5, 1.0, 1).unwrap();
    let horizon = 60.0;
    let samples = simulator::sample_walk_batch(1.5, 1.0, 1, horizon, 5, 50_000).unwrap();
    let ks = stats::ks_against_law(&samples, &law, horizon, 0.01).unwrap();
    assert!(ks.passed, "{ks:?}");
    let censored = samples.iter().filter(|s| s.is_censored()).count();
    assert!(stats::binomial_consistent(
        censored,
        samples.len(),
        law.survival_tail(horizon).unwrap()
    ));
}

#[test]
fn exponential_fitness_law_matches_analytic_tail() {
    let dist = FitnessDistribution::exponential(2.0).unwrap();
    let p = ModelParams::new(1.5, 1.0, dist, 3, 0.4).unwrap();
    let law = SurvivalLaw::from_params(&p).unwrap();
    let samples = simulator::sample_survival_batch(&p, 500.0, 3, 20_000).unwrap();
    for t in [0.5, 2.0, 6.0, 15.0] {
        let e = stats::empirical_tail(&samples, t).unwrap();
        let want = law.survival_tail(t).unwrap();
        let wide = stats::wilson_interval(
            (e.estimate * samples.len() as f64).round() as usize,
            samples.len(),
            4.0,
        );
        assert!(wide.contains(want), "t={t}: {} vs {want}", e.estimate);
    }
}

#[test]
fn fitnesses_above_the_tagged_one_do_not_matter() {
    for seed in 0..300u64 {
        let k = 1 + (seed % 4) as u32;
        let f = [0.3, 0.5, 0.7][(seed % 3) as usize];
        let p = uniform_params(f, k);
        let mut a = MarkStream::for_model(seed, 0, &p).unwrap();
        let mut b = MarkStream::for_model(seed, 0, &p).unwrap();
        let reduced = simulator::simulate_survival_time(&p, 300.0, &mut a).unwrap();
        let full = simulator::simulate_survival_time_full(&p, 300.0, &mut b).unwrap();
        assert_eq!(reduced, full, "seed {seed}");
    }
}

#[test]
fn coupling_holds_for_non_uniform_laws() {
    let dists = [
        FitnessDistribution::exponential(1.0).unwrap(),
        FitnessDistribution::table(vec![0.0, 1.0, 3.0], vec![0.0, 0.2, 1.0]).unwrap(),
    ];
    for (d, dist) in dists.iter().enumerate() {
        for seed in 0..100u64 {
            let k = 1 + (seed % 5) as u32;
            let f = dist.quantile(0.2 + 0.15 * (seed % 5) as f64);
            let p = ModelParams::new(2.5, 1.0, dist.clone(), k, f).unwrap();
            let mut stream = MarkStream::for_model(seed, d as u64, &p).unwrap();
            let run = simulator::run_coupled(&p, f64::MAX, 5_000, &mut stream).unwrap();
            assert!(run.agreed(), "dist {d} seed {seed}: {run:?}");
        }
    }
}

#[test]
fn event_counts_are_poisson() {
    let p = uniform_params(0.25, 1);
    let t_end = 100.0;
    let runs = 2_000;
    let counts: Vec<f64> = (0..runs)
        .map(|i| {
            let mut s = MarkStream::for_model(9, i, &p).unwrap();
            simulator::observe_population(p.lambda, p.mu, &p.dist, t_end, (0.6, 0.8), 0, &mut s)
                .unwrap()
                .events as f64
        })
        .collect();
    let expected = p.total_rate() * t_end;
    let mean = counts.iter().sum::<f64>() / runs as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    assert!(
        (mean - expected).abs() < 3.0 * (expected / runs as f64).sqrt(),
        "mean {mean}"
    );
    assert!((var / expected - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn walk_statistics() {
    // From k = 2 at lambda_f = 0.5, mu = 1: mean time k / (mu - lambda_f) = 4
    // and mean step count k / (q - p) = 6.
    let samples = simulator::sample_walk_batch(0.5, 1.0, 2, 1e5, 1, 100_000).unwrap();
    let times: Vec<f64> = samples.iter().map(|s| s.finite_time().unwrap()).collect();
    let m = stats::MeanEstimate::from_values(&times).unwrap();
    assert!(m.interval(3.0).contains(4.0), "{m:?}");
    let steps: Vec<f64> = samples.iter().map(|s| s.events_consumed as f64).collect();
    let s = stats::MeanEstimate::from_values(&steps).unwrap();
    assert!(s.interval(3.0).contains(6.0), "{s:?}");
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let p = uniform_params(0.6, 2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulator::sample_survival_batch(&p, 50.0, 77, 5_000).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn window_count_grows_linearly() {
    let p = uniform_params(0.25, 1);
    let mut s = MarkStream::for_model(3, 0, &p).unwrap();
    let obs =
        simulator::observe_population(p.lambda, p.mu, &p.dist, 2_000.0, (0.6, 0.8), 10, &mut s)
            .unwrap();
    // Per unit time the window fills at lambda (F(b) - F(a)) = 0.4.
    let rate = obs.r_window_count as f64 / 2_000.0;
    assert!((rate - 0.4).abs() < 0.04, "rate {rate}");
    assert_eq!(obs.l_trace.len(), 11);
    assert!(obs.empty_l_episodes > 0);
}
