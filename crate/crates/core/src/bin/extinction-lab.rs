use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use extinction_lab::experiments::{self, Command, ExperimentConfig, ExperimentError, Grid};
use extinction_lab::fitness_model::{FitnessDistribution, ModelParams};

#[derive(Parser)]
#[command(
    name = "extinction-lab",
    version,
    about = "Survival times in a birth/death fitness model"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Analytic survival curve, with an empirical overlay when samples > 0.
    SurvivalCurve(Opts),
    /// Simulate and gate against the analytic law (KS and censoring).
    Validate(Opts),
    /// Censored fraction and defect across a grid of tagged fitness values.
    PhaseSweep(Opts),
    /// Window counts of the full population against the limiting rate.
    PopulationLln(Opts),
    /// Exact excess tail against its large-t asymptotic.
    Asymptotics(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// uniform:a,b | exp:rate | table:<path>
    #[arg(long, default_value = "uniform:0,1")]
    dist: String,
    #[arg(long, default_value_t = 0.25)]
    fitness: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Number of Monte Carlo runs (command-specific default).
    #[arg(long)]
    samples: Option<usize>,
    /// Censoring horizon, or simulated time for population-lln.
    #[arg(long)]
    horizon: Option<f64>,
    /// Comma-separated times or `auto`.
    #[arg(long, default_value = "auto")]
    t_grid: String,
    /// Comma-separated fitness values or `auto` (phase-sweep).
    #[arg(long, default_value = "auto")]
    f_grid: String,
    /// Open fitness window `a,b` (population-lln).
    #[arg(long)]
    window: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_window(s: &str) -> Result<(f64, f64), ExperimentError> {
    let bad = || ExperimentError::Config(format!("window must be `a,b`, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn build(command: Command, o: Opts) -> Result<ExperimentConfig, ExperimentError> {
    let dist = FitnessDistribution::from_spec(&o.dist)?;
    let params = ModelParams::new(o.lambda, o.mu, dist, o.k, o.fitness)?;
    let mut cfg = ExperimentConfig::new(command, params, o.out);
    if let Some(n) = o.samples {
        cfg.samples = n;
    }
    cfg.horizon = o.horizon;
    cfg.t_grid = o.t_grid.parse()?;
    cfg.f_grid = o.f_grid.parse::<Grid>()?;
    cfg.window = o.window.as_deref().map(parse_window).transpose()?;
    cfg.seed = o.seed;
    cfg.alpha = o.alpha;
    Ok(cfg)
}

fn main() -> ExitCode {
    // Usage errors are configuration errors (3); exit code 2 is reserved for
    // a failed statistical gate.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, opts) = match cli.command {
        Sub::SurvivalCurve(o) => (Command::SurvivalCurve, o),
        Sub::Validate(o) => (Command::Validate, o),
        Sub::PhaseSweep(o) => (Command::PhaseSweep, o),
        Sub::PopulationLln(o) => (Command::PopulationLln, o),
        Sub::Asymptotics(o) => (Command::Asymptotics, o),
    };
    let result = build(command, opts).and_then(|cfg| experiments::run_experiment(&cfg));
    match result {
        Ok(report) => {
            println!("wrote {}", report.csv_path.display());
            println!("wrote {}", report.json_path.display());
            if let Some(gate) = &report.gate {
                for check in &gate.checks {
                    let status = if check.passed { "PASS" } else { "FAIL" };
                    println!("{status} {}: {}", check.name, check.detail);
                }
            }
            if let Some(mean) = &report.mean_check {
                println!("mean: {}", mean.verdict);
            }
            if report.gate_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
