//! Experiment orchestration: configuration, Monte Carlo batches, statistical
//! gates and CSV/JSON output.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]; run `i`
//! of a batch uses stream `i` of the master seed, so CSV output is
//! byte-identical across repeated runs and thread counts. Timing only
//! appears in the JSON report.

pub mod stats;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::fitness_model::{FitnessError, ModelParams, Regime};
use crate::simulator::{self, MarkStream, SimError, SurvivalSample};
use crate::survival_law::{LawError, SurvivalLaw};

use stats::{Interval, KsResult, MeanEstimate, StatsError, TailEstimate};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EXTINCTION_LAB_THREADS";

/// Tail level used to pick the default censoring horizon.
const HORIZON_TAIL_LEVEL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// 3 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Fitness(_)
            | ExperimentError::Law(LawError::InvalidParameter(_))
            | ExperimentError::Sim(
                SimError::InvalidHorizon(_)
                | SimError::InvalidWindow { .. }
                | SimError::NotSupercritical { .. }
                | SimError::InvalidRate(_),
            ) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SurvivalCurve,
    Validate,
    PhaseSweep,
    PopulationLln,
    Asymptotics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SurvivalCurve => "survival-curve",
            Command::Validate => "validate",
            Command::PhaseSweep => "phase-sweep",
            Command::PopulationLln => "population-lln",
            Command::Asymptotics => "asymptotics",
        }
    }

    /// Sample count used when none is given.
    pub fn default_samples(self) -> usize {
        match self {
            Command::SurvivalCurve | Command::Asymptotics => 0,
            Command::Validate => 100_000,
            Command::PhaseSweep => 2_000,
            Command::PopulationLln => 20,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Command::SurvivalCurve,
            Command::Validate,
            Command::PhaseSweep,
            Command::PopulationLln,
            Command::Asymptotics,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| ExperimentError::Config(format!("unknown command {s:?}")))
    }
}

/// A list of evaluation points, or `auto` for a command-specific default.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Auto,
    Values(Vec<f64>),
}

impl FromStr for Grid {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "auto" {
            return Ok(Grid::Auto);
        }
        let values = s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ExperimentError::Config(format!("bad grid value {v:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Grid::values(values)
    }
}

impl Grid {
    pub fn values(values: Vec<f64>) -> Result<Self, ExperimentError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::Config("grid needs finite values".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::Config(
                "grid must be strictly increasing".into(),
            ));
        }
        Ok(Grid::Values(values))
    }

    fn resolve(&self, auto: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
        match self {
            Grid::Auto => auto(),
            Grid::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: ModelParams,
    pub samples: usize,
    /// `None` picks a horizon from the analytic tail.
    pub horizon: Option<f64>,
    pub t_grid: Grid,
    pub f_grid: Grid,
    pub window: Option<(f64, f64)>,
    pub seed: u64,
    pub alpha: f64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(command: Command, params: ModelParams, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            params,
            samples: command.default_samples(),
            horizon: None,
            t_grid: Grid::Auto,
            f_grid: Grid::Auto,
            window: None,
            seed: 42,
            alpha: 0.01,
            out_dir: out_dir.into(),
        }
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if matches!(
            self.command,
            Command::Validate | Command::PhaseSweep | Command::PopulationLln
        ) && self.samples == 0
        {
            return Err(ExperimentError::Config(format!(
                "{} needs samples >= 1",
                self.command
            )));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ExperimentError::Config(format!(
                    "horizon must be positive, got {h}"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ExperimentError::Config(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Smallest `t` on a 1.25-geometric ladder from `1/c` whose asymptotic excess
/// tail is below `1e-4`, capped at `1e4 / mu`.
pub fn default_horizon(law: &SurvivalLaw) -> f64 {
    let cap = 1e4 / law.mu();
    let mut t = 1.0 / law.c();
    while t < cap && law.asymptotic_excess(t) >= HORIZON_TAIL_LEVEL {
        t *= 1.25;
    }
    t.min(cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub analytic_tail: f64,
    pub asymptotic_tail: f64,
    pub empirical: Option<TailEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensoringCheck {
    pub censored: usize,
    pub n: usize,
    pub fraction: f64,
    pub defect: f64,
    pub residual_tail: f64,
    /// `defect + residual_tail = P(tau > horizon)`.
    pub expected: f64,
    pub ci_3sigma: Interval,
    pub passed: bool,
}

impl CensoringCheck {
    pub fn evaluate(
        samples: &[SurvivalSample],
        law: &SurvivalLaw,
        horizon: f64,
    ) -> Result<Self, LawError> {
        let censored = samples.iter().filter(|s| s.is_censored()).count();
        let n = samples.len();
        let expected = law.survival_tail(horizon)?;
        let defect = law.defect();
        Ok(Self {
            censored,
            n,
            fraction: censored as f64 / n as f64,
            defect,
            residual_tail: expected - defect,
            expected,
            ci_3sigma: stats::wilson_interval(censored, n, 3.0),
            passed: stats::binomial_consistent(censored, n, expected),
        })
    }
}

/// Monte Carlo mean against the two candidate closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCheck {
    /// `-k M'(0) = k / (mu - lambda_f)`.
    pub mgf_derived: f64,
    /// `2 k mu / (mu - lambda_f)`.
    pub doubled_formula: f64,
    pub monte_carlo: MeanEstimate,
    pub ci_3sigma: Interval,
    pub censored_excluded: usize,
    pub consistent_with: Vec<String>,
    pub verdict: String,
}

impl MeanCheck {
    /// `None` unless the law is subcritical and at least two finite samples
    /// exist.
    pub fn evaluate(samples: &[SurvivalSample], law: &SurvivalLaw) -> Option<Self> {
        let mgf_derived = law.mean_survival().finite()?;
        let doubled_formula = law.doubled_mean_formula()?;
        let times: Vec<f64> = samples.iter().filter_map(|s| s.finite_time()).collect();
        let monte_carlo = MeanEstimate::from_values(&times)?;
        let ci = monte_carlo.interval(3.0);
        let mut consistent_with = Vec::new();
        if ci.contains(mgf_derived) {
            consistent_with.push("mgf_derived".to_string());
        }
        if ci.contains(doubled_formula) {
            consistent_with.push("doubled_formula".to_string());
        }
        let verdict = match consistent_with.as_slice() {
            [one] if one == "mgf_derived" => format!(
                "Monte Carlo mean {:.6} supports k/(mu - lambda_f) = {mgf_derived}",
                monte_carlo.mean
            ),
            [_] => format!(
                "Monte Carlo mean {:.6} supports 2k mu/(mu - lambda_f) = {doubled_formula}",
                monte_carlo.mean
            ),
            [] => format!(
                "Monte Carlo mean {:.6} matches neither candidate",
                monte_carlo.mean
            ),
            _ => "Monte Carlo interval too wide to separate the candidates".to_string(),
        };
        Some(Self {
            mgf_derived,
            doubled_formula,
            monte_carlo,
            ci_3sigma: ci,
            censored_excluded: samples.len() - times.len(),
            consistent_with,
            verdict,
        })
    }

    /// The single supported candidate, if exactly one is.
    pub fn unique_match(&self) -> Option<&str> {
        match self.consistent_with.as_slice() {
            [one] => Some(one.as_str()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub passed: bool,
    pub checks: Vec<GateCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub fitness: f64,
    pub lambda_f: f64,
    pub regime: Regime,
    pub defect: f64,
    pub analytic_tail_at_horizon: f64,
    pub censored_fraction: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationRun {
    pub run: u64,
    pub r_window_count: usize,
    pub rate: f64,
    pub events: u64,
    pub rate_per_event: f64,
    pub empty_l_episodes: usize,
    pub final_population: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub t_end: f64,
    pub critical_fitness: f64,
    pub window: (f64, f64),
    /// `lambda (F(b) - F(a)) / (lambda + mu)`.
    pub target_rate: f64,
    /// Window count per unit time, averaged over runs.
    pub mean_rate: f64,
    pub relative_error: f64,
    /// Window count per event of the process, averaged over runs.
    pub mean_rate_per_event: f64,
    pub relative_error_per_event: f64,
    pub min_empty_l_episodes: usize,
    pub mean_empty_l_episodes: f64,
    pub runs: Vec<PopulationRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub t: f64,
    pub exact_tail: f64,
    pub asymptotic_tail: f64,
    pub exact_excess: f64,
    pub asymptotic_excess: f64,
    pub ratio_exact_over_asymptotic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticSummary {
    pub final_ratio: f64,
    pub final_within_5_percent: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config: ExperimentConfig,
    pub horizon: f64,
    pub lambda_f: f64,
    pub regime: Regime,
    pub critical_fitness: Option<f64>,
    pub defect: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurveRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censoring: Option<CensoringCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_check: Option<MeanCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phase: Vec<PhaseRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub asymptotics: Vec<AsymptoticRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic_summary: Option<AsymptoticSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub timing: Timing,
}

impl RunReport {
    pub fn gate_passed(&self) -> bool {
        self.gate.as_ref().is_none_or(|g| g.passed)
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, ExperimentError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ExperimentError::Config(format!(
                "{THREADS_ENV}={v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn linear_grid(end: f64, points: usize) -> Vec<f64> {
    (0..=points)
        .map(|i| end * i as f64 / points as f64)
        .collect()
}

fn geometric_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    let ratio = (end / start).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| start * ratio.powi(i as i32)).collect()
}

struct Outputs {
    csv: csv::Writer<fs::File>,
    csv_path: PathBuf,
    json_path: PathBuf,
}

impl Outputs {
    fn create(dir: &Path, command: Command) -> Result<Self, ExperimentError> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", command.name()));
        let json_path = dir.join(format!("{}.json", command.name()));
        Ok(Self {
            csv: csv::Writer::from_path(&csv_path)?,
            csv_path,
            json_path,
        })
    }
}

/// Runs one experiment and writes `<out>/<command>.csv` and
/// `<out>/<command>.json`.
///
/// A failed statistical gate is not an error: check
/// [`RunReport::gate_passed`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    config.check()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let mut report = pool.install(|| execute(config))?;
    report.timing = Timing {
        elapsed_seconds: started.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
    };
    fs::write(&report.json_path, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn execute(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let params = &config.params;
    let law = SurvivalLaw::from_params(params)?;
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(&law));
    let mut out = Outputs::create(&config.out_dir, config.command)?;
    let mut report = RunReport {
        command: config.command,
        config: config.clone(),
        horizon,
        lambda_f: law.lambda_f(),
        regime: law.regime(),
        critical_fitness: params.critical_fitness(),
        defect: law.defect(),
        curve: Vec::new(),
        ks: None,
        censoring: None,
        mean_check: None,
        phase: Vec::new(),
        population: None,
        asymptotics: Vec::new(),
        asymptotic_summary: None,
        gate: None,
        csv_path: out.csv_path.clone(),
        json_path: out.json_path.clone(),
        timing: Timing {
            elapsed_seconds: 0.0,
            threads: 0,
        },
    };

    match config.command {
        Command::SurvivalCurve | Command::Validate => {
            survival_curve(config, &law, horizon, &mut out, &mut report)?
        }
        Command::PhaseSweep => phase_sweep(config, horizon, &mut out, &mut report)?,
        Command::PopulationLln => population_lln(config, &mut out, &mut report)?,
        Command::Asymptotics => asymptotics(config, &law, &mut out, &mut report)?,
    }
    out.csv.flush()?;
    Ok(report)
}

fn survival_curve(
    config: &ExperimentConfig,
    law: &SurvivalLaw,
    horizon: f64,
    out: &mut Outputs,
    report: &mut RunReport,
) -> Result<(), ExperimentError> {
    let grid = config.t_grid.resolve(|| linear_grid(horizon, 40));
    if grid.iter().any(|&t| t < 0.0) {
        return Err(ExperimentError::Config(
            "t-grid values must be non-negative".into(),
        ));
    }
    let samples = if config.samples > 0 {
        if let Some(&t) = grid.iter().find(|&&t| t > horizon) {
            return Err(ExperimentError::Config(format!(
                "t-grid point {t} lies beyond the horizon {horizon}"
            )));
        }
        simulator::sample_survival_batch(&config.params, horizon, config.seed, config.samples)?
    } else {
        Vec::new()
    };

    out.csv.write_record([
        "t",
        "analytic_tail",
        "asymptotic_tail",
        "empirical_tail",
        "ci_lo",
        "ci_hi",
    ])?;
    for &t in &grid {
        let empirical = if samples.is_empty() {
            None
        } else {
            Some(stats::empirical_tail(&samples, t)?)
        };
        let row = CurveRow {
            t,
            analytic_tail: law.survival_tail(t)?,
            asymptotic_tail: if t > 0.0 {
                law.tail_asymptotic(t)
            } else {
                f64::NAN
            },
            empirical,
        };
        let (e, lo, hi) = match row.empirical {
            Some(e) => (num(e.estimate), num(e.ci.lo), num(e.ci.hi)),
            None => (String::new(), String::new(), String::new()),
        };
        out.csv.write_record([
            num(row.t),
            num(row.analytic_tail),
            num(row.asymptotic_tail),
            e,
            lo,
            hi,
        ])?;
        report.curve.push(row);
    }

    if config.command == Command::Validate {
        let mut checks = Vec::new();
        match stats::ks_against_law(&samples, law, horizon, config.alpha) {
            Ok(ks) => {
                checks.push(GateCheck {
                    name: "ks".into(),
                    passed: ks.passed,
                    detail: format!(
                        "D = {:.6} vs critical {:.6} at alpha {} (n = {})",
                        ks.statistic, ks.critical_value, ks.alpha, ks.finite_samples
                    ),
                });
                report.ks = Some(ks);
            }
            Err(StatsError::TooFewFinite(n)) => checks.push(GateCheck {
                name: "ks".into(),
                passed: false,
                detail: format!("only {n} finite samples"),
            }),
            Err(e) => return Err(e.into()),
        }
        let censoring = CensoringCheck::evaluate(&samples, law, horizon)?;
        checks.push(GateCheck {
            name: "censoring".into(),
            passed: censoring.passed,
            detail: format!(
                "censored fraction {:.6} vs expected {:.6} (defect {:.6})",
                censoring.fraction, censoring.expected, censoring.defect
            ),
        });
        report.censoring = Some(censoring);
        report.mean_check = MeanCheck::evaluate(&samples, law);
        report.gate = Some(Gate {
            passed: checks.iter().all(|c| c.passed),
            checks,
        });
    }
    Ok(())
}

fn phase_sweep(
    config: &ExperimentConfig,
    horizon: f64,
    out: &mut Outputs,
    report: &mut RunReport,
) -> Result<(), ExperimentError> {
    let base = &config.params;
    let grid = config.f_grid.resolve(|| {
        (1..20)
            .map(|i| base.dist.quantile(i as f64 * 0.05))
            .collect()
    });
    out.csv.write_record([
        "f",
        "lambda_f",
        "regime",
        "defect",
        "analytic_tail_at_horizon",
        "censored_fraction",
        "ci_lo",
        "ci_hi",
    ])?;
    for &f in &grid {
        let params = ModelParams::new(base.lambda, base.mu, base.dist.clone(), base.k, f)?;
        let law = SurvivalLaw::from_params(&params)?;
        let samples =
            simulator::sample_survival_batch(&params, horizon, config.seed, config.samples)?;
        let censored = samples.iter().filter(|s| s.is_censored()).count();
        let row = PhaseRow {
            fitness: f,
            lambda_f: law.lambda_f(),
            regime: law.regime(),
            defect: law.defect(),
            analytic_tail_at_horizon: law.survival_tail(horizon)?,
            censored_fraction: censored as f64 / samples.len() as f64,
            ci: stats::wilson_interval(censored, samples.len(), stats::Z_95),
        };
        out.csv.write_record([
            num(row.fitness),
            num(row.lambda_f),
            row.regime.to_string(),
            num(row.defect),
            num(row.analytic_tail_at_horizon),
            num(row.censored_fraction),
            num(row.ci.lo),
            num(row.ci.hi),
        ])?;
        report.phase.push(row);
    }
    Ok(())
}

/// Default window: the quantiles at 20% and 60% of the way from `mu/lambda`
/// to 1.
pub fn default_window(params: &ModelParams) -> Option<(f64, f64)> {
    (params.lambda > params.mu).then(|| {
        let pc = params.mu / params.lambda;
        (
            params.dist.quantile(pc + 0.2 * (1.0 - pc)),
            params.dist.quantile(pc + 0.6 * (1.0 - pc)),
        )
    })
}

fn population_lln(
    config: &ExperimentConfig,
    out: &mut Outputs,
    report: &mut RunReport,
) -> Result<(), ExperimentError> {
    use rayon::prelude::*;

    let p = &config.params;
    let t_end = config.horizon.unwrap_or(1e4);
    report.horizon = t_end;
    let window = match config.window {
        Some(w) => w,
        None => default_window(p).ok_or(SimError::NotSupercritical {
            lambda: p.lambda,
            mu: p.mu,
        })?,
    };
    let observations = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = MarkStream::new(config.seed, i, p.total_rate())?;
            simulator::observe_population(p.lambda, p.mu, &p.dist, t_end, window, 0, &mut stream)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let target_rate = p.lambda * (p.dist.cdf(window.1) - p.dist.cdf(window.0)) / (p.lambda + p.mu);
    out.csv.write_record([
        "run",
        "r_window_count",
        "rate",
        "events",
        "rate_per_event",
        "target_rate",
        "empty_l_episodes",
        "final_population",
    ])?;
    let mut runs = Vec::with_capacity(observations.len());
    for (i, obs) in observations.iter().enumerate() {
        let run = PopulationRun {
            run: i as u64,
            r_window_count: obs.r_window_count,
            rate: obs.r_window_count as f64 / t_end,
            events: obs.events,
            rate_per_event: obs.r_window_count as f64 / obs.events.max(1) as f64,
            empty_l_episodes: obs.empty_l_episodes,
            final_population: obs.final_population,
        };
        out.csv.write_record([
            run.run.to_string(),
            run.r_window_count.to_string(),
            num(run.rate),
            run.events.to_string(),
            num(run.rate_per_event),
            num(target_rate),
            run.empty_l_episodes.to_string(),
            run.final_population.to_string(),
        ])?;
        runs.push(run);
    }
    let n = runs.len() as f64;
    let mean_rate = runs.iter().map(|r| r.rate).sum::<f64>() / n;
    let mean_rate_per_event = runs.iter().map(|r| r.rate_per_event).sum::<f64>() / n;
    report.population = Some(PopulationSummary {
        t_end,
        critical_fitness: observations[0].critical_fitness,
        window,
        target_rate,
        mean_rate,
        relative_error: (mean_rate - target_rate).abs() / target_rate,
        mean_rate_per_event,
        relative_error_per_event: (mean_rate_per_event - target_rate).abs() / target_rate,
        min_empty_l_episodes: runs.iter().map(|r| r.empty_l_episodes).min().unwrap_or(0),
        mean_empty_l_episodes: runs.iter().map(|r| r.empty_l_episodes as f64).sum::<f64>() / n,
        runs,
    });
    Ok(())
}

fn asymptotics(
    config: &ExperimentConfig,
    law: &SurvivalLaw,
    out: &mut Outputs,
    report: &mut RunReport,
) -> Result<(), ExperimentError> {
    let grid = config.t_grid.resolve(|| match law.regime() {
        Regime::Critical => geometric_grid(10.0 / law.mu(), 1e4 / law.mu(), 20),
        _ => geometric_grid(5.0 / law.gamma(), 200.0 / law.gamma(), 20),
    });
    if grid.iter().any(|&t| t <= 0.0) {
        return Err(ExperimentError::Config(
            "asymptotics needs positive times".into(),
        ));
    }
    out.csv.write_record([
        "t",
        "exact_tail",
        "asymptotic_tail",
        "exact_excess",
        "asymptotic_excess",
        "ratio_exact_over_asymptotic",
    ])?;
    for &t in &grid {
        let exact_excess = law.tail_integral(t)?;
        let asymptotic_excess = law.asymptotic_excess(t);
        let row = AsymptoticRow {
            t,
            exact_tail: law.survival_tail(t)?,
            asymptotic_tail: law.tail_asymptotic(t),
            exact_excess,
            asymptotic_excess,
            ratio_exact_over_asymptotic: exact_excess / asymptotic_excess,
        };
        out.csv.write_record([
            num(row.t),
            num(row.exact_tail),
            num(row.asymptotic_tail),
            num(row.exact_excess),
            num(row.asymptotic_excess),
            num(row.ratio_exact_over_asymptotic),
        ])?;
        report.asymptotics.push(row);
    }
    let ratios: Vec<f64> = report
        .asymptotics
        .iter()
        .map(|r| r.ratio_exact_over_asymptotic)
        .collect();
    let last = *ratios.last().expect("grid is non-empty");
    let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    report.asymptotic_summary = Some(AsymptoticSummary {
        final_ratio: last,
        final_within_5_percent: (last - 1.0).abs() <= 0.05,
        monotone: gaps.windows(2).all(|w| w[1] <= w[0]),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness_model::FitnessDistribution;

    fn params(f: f64) -> ModelParams {
        ModelParams::new(
            2.0,
            1.0,
            FitnessDistribution::uniform(0.0, 1.0).unwrap(),
            1,
            f,
        )
        .unwrap()
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("auto".parse::<Grid>().unwrap(), Grid::Auto);
        assert_eq!(
            "0.5, 1,2".parse::<Grid>().unwrap(),
            Grid::Values(vec![0.5, 1.0, 2.0])
        );
        assert!("1,1".parse::<Grid>().is_err());
        assert!("2,1".parse::<Grid>().is_err());
        assert!("1,x".parse::<Grid>().is_err());
    }

    #[test]
    fn command_names_round_trip() {
        for c in [
            Command::SurvivalCurve,
            Command::Validate,
            Command::PhaseSweep,
            Command::PopulationLln,
            Command::Asymptotics,
        ] {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn default_horizon_reaches_tail_level() {
        let law = SurvivalLaw::new(0.5, 1.0, 1).unwrap();
        let h = default_horizon(&law);
        assert!(law.asymptotic_excess(h) < HORIZON_TAIL_LEVEL);
        assert!(law.asymptotic_excess(h / 1.25) >= HORIZON_TAIL_LEVEL);
        let crit = SurvivalLaw::new(1.0, 1.0, 1).unwrap();
        assert_eq!(default_horizon(&crit), 1e4);
    }

    #[test]
    fn default_window_for_reference_parameters() {
        let (a, b) = default_window(&params(0.25)).unwrap();
        assert!((a - 0.6).abs() < 1e-12 && (b - 0.8).abs() < 1e-12);
    }

    #[test]
    fn config_errors_map_to_exit_code_three() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Command::Validate, params(0.25), dir.path());
        cfg.samples = 0;
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        cfg.samples = 10;
        cfg.t_grid = Grid::Values(vec![1.0, 1e9]);
        assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn analytic_only_curve() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Command::SurvivalCurve, params(0.25), dir.path());
        cfg.samples = 0;
        cfg.t_grid = Grid::Values(vec![0.0, 1.0, 5.0]);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.curve.len(), 3);
        assert!(report.curve.iter().all(|r| r.empirical.is_none()));
        let csv = fs::read_to_string(&report.csv_path).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "t,analytic_tail,asymptotic_tail,empirical_tail,ci_lo,ci_hi"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,,,,"));
        assert!(report.json_path.exists());
    }
}
