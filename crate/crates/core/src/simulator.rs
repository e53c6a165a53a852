//! Event-driven simulation of the fitness process.
//!
//! Events arrive at total rate `lambda + mu`. Each event carries a height
//! uniform on `[0, lambda + mu)`: a height below `lambda` is a birth whose
//! fitness is `F^-1(height / lambda)`, anything else kills the species with
//! the smallest fitness. A death on an empty population is consumed without
//! effect.
//!
//! Monte Carlo batches give run `i` stream `i` of the master seed, so any
//! single path can be replayed from `(seed, i)`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fitness_model::{critical_fitness, FitnessDistribution, ModelParams};
use crate::multiset::{Entry, FitnessMultiset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("mark stream runs at rate {stream}, process needs {process}")]
    RateMismatch { stream: f64, process: f64 },
    #[error("population observation needs lambda > mu (lambda = {lambda}, mu = {mu})")]
    NotSupercritical { lambda: f64, mu: f64 },
    #[error("window ({a}, {b}) must satisfy f_c = {critical} <= a < b")]
    InvalidWindow { a: f64, b: f64, critical: f64 },
}

/// One point of the marked Poisson stream: waiting time since the previous
/// mark and the mark height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub wait: f64,
    pub height: f64,
}

pub trait MarkSource {
    fn next_mark(&mut self) -> Mark;

    /// Uniform draw on `[0, 1)` used for initial conditions.
    fn unit_draw(&mut self) -> f64;

    /// Rate of the stream, if it has one.
    fn total_rate(&self) -> Option<f64> {
        None
    }
}

/// Seeded mark stream: exponential waits at `total_rate`, heights uniform on
/// `[0, total_rate)`.
#[derive(Debug, Clone)]
pub struct MarkStream {
    seed: u64,
    index: u64,
    total_rate: f64,
    rng: ChaCha8Rng,
}

impl MarkStream {
    pub fn new(seed: u64, index: u64, total_rate: f64) -> Result<Self, SimError> {
        if !(total_rate.is_finite() && total_rate > 0.0) {
            return Err(SimError::InvalidRate(format!("total rate {total_rate}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Ok(Self {
            seed,
            index,
            total_rate,
            rng,
        })
    }

    /// Stream for the full process, rate `lambda + mu`.
    pub fn for_model(seed: u64, index: u64, params: &ModelParams) -> Result<Self, SimError> {
        Self::new(seed, index, params.total_rate())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }
}

impl MarkSource for MarkStream {
    fn next_mark(&mut self) -> Mark {
        let e: f64 = self.rng.sample(Exp1);
        let u: f64 = self.rng.random();
        Mark {
            wait: e / self.total_rate,
            height: u * self.total_rate,
        }
    }

    fn unit_draw(&mut self) -> f64 {
        self.rng.random()
    }

    fn total_rate(&self) -> Option<f64> {
        Some(self.total_rate)
    }
}

/// Fixed list of marks; once exhausted every wait is infinite. Unit draws
/// return `0.5`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedMarks {
    marks: VecDeque<Mark>,
}

impl ScriptedMarks {
    pub fn new(marks: impl IntoIterator<Item = Mark>) -> Self {
        Self {
            marks: marks.into_iter().collect(),
        }
    }
}

impl MarkSource for ScriptedMarks {
    fn next_mark(&mut self) -> Mark {
        self.marks.pop_front().unwrap_or(Mark {
            wait: f64::INFINITY,
            height: 0.0,
        })
    }

    fn unit_draw(&mut self) -> f64 {
        0.5
    }
}

/// Current time and the living fitnesses.
#[derive(Debug, Clone, Default)]
pub struct ProcessState {
    pub time: f64,
    pub living: FitnessMultiset,
}

impl ProcessState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fitnesses(fitnesses: impl IntoIterator<Item = f64>) -> Self {
        Self {
            time: 0.0,
            living: fitnesses.into_iter().collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.living.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Birth { fitness: f64, entry: Entry },
    Death { removed: Option<(f64, Entry)> },
}

fn check_rate<M: MarkSource + ?Sized>(source: &M, process: f64) -> Result<(), SimError> {
    match source.total_rate() {
        Some(stream) if (stream - process).abs() > 1e-12 * process => {
            Err(SimError::RateMismatch { stream, process })
        }
        _ => Ok(()),
    }
}

fn check_horizon(horizon: f64) -> Result<(), SimError> {
    if horizon > 0.0 && !horizon.is_nan() {
        Ok(())
    } else {
        Err(SimError::InvalidHorizon(horizon))
    }
}

/// Applies one mark to `state`.
pub fn step<M: MarkSource + ?Sized>(
    state: &mut ProcessState,
    lambda: f64,
    dist: &FitnessDistribution,
    source: &mut M,
) -> Event {
    let mark = source.next_mark();
    state.time += mark.wait;
    apply_mark(state, lambda, dist, mark)
}

fn apply_mark(
    state: &mut ProcessState,
    lambda: f64,
    dist: &FitnessDistribution,
    mark: Mark,
) -> Event {
    if mark.height < lambda {
        let fitness = dist.quantile(mark.height / lambda);
        let entry = state.living.insert(fitness);
        Event::Birth { fitness, entry }
    } else {
        Event::Death {
            removed: state.living.pop_min(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "time", rename_all = "snake_case")]
pub enum Outcome {
    FiniteTime(f64),
    Censored(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalSample {
    pub outcome: Outcome,
    pub events_consumed: u64,
}

impl SurvivalSample {
    fn finite(t: f64, events: u64) -> Self {
        Self {
            outcome: Outcome::FiniteTime(t),
            events_consumed: events,
        }
    }

    fn censored(horizon: f64, events: u64) -> Self {
        Self {
            outcome: Outcome::Censored(horizon),
            events_consumed: events,
        }
    }

    pub fn finite_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::FiniteTime(t) => Some(t),
            Outcome::Censored(_) => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self.outcome, Outcome::Censored(_))
    }
}

/// Initial population: `k - 1` fitnesses from `F` conditioned below `f`,
/// then the tagged fitness `f`.
fn initial_state<M: MarkSource + ?Sized>(
    params: &ModelParams,
    source: &mut M,
) -> (ProcessState, Entry) {
    let below = params.dist.cdf(params.fitness);
    let mut state = ProcessState::new();
    for _ in 1..params.k {
        let v = params.dist.quantile(source.unit_draw() * below);
        state.living.insert(v.min(params.fitness));
    }
    let tagged = state.living.insert(params.fitness);
    (state, tagged)
}

fn run_tagged<M: MarkSource + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    source: &mut M,
    keep_above: bool,
) -> Result<SurvivalSample, SimError> {
    check_horizon(horizon)?;
    check_rate(source, params.total_rate())?;
    let (mut state, tagged) = initial_state(params, source);
    let mut events = 0u64;
    loop {
        let mark = source.next_mark();
        events += 1;
        state.time += mark.wait;
        if state.time > horizon {
            return Ok(SurvivalSample::censored(horizon, events));
        }
        if mark.height < params.lambda {
            let fitness = params.dist.quantile(mark.height / params.lambda);
            if keep_above || fitness <= params.fitness {
                state.living.insert(fitness);
            }
        } else if let Some((_, entry)) = state.living.pop_min() {
            if entry == tagged {
                return Ok(SurvivalSample::finite(state.time, events));
            }
        }
    }
}

/// Survival time of the tagged species, tracking only fitnesses `<= f`.
pub fn simulate_survival_time<M: MarkSource + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    source: &mut M,
) -> Result<SurvivalSample, SimError> {
    run_tagged(params, horizon, source, false)
}

/// Same as [`simulate_survival_time`] but keeping every species alive.
pub fn simulate_survival_time_full<M: MarkSource + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    source: &mut M,
) -> Result<SurvivalSample, SimError> {
    run_tagged(params, horizon, source, true)
}

/// First passage to 0 of the walk started at `k` that jumps at rate
/// `lambda_f + mu`, upward with probability `lambda_f / (lambda_f + mu)`.
pub fn simulate_walk_hitting<M: MarkSource + ?Sized>(
    lambda_f: f64,
    mu: f64,
    k: u32,
    horizon: f64,
    source: &mut M,
) -> Result<SurvivalSample, SimError> {
    check_horizon(horizon)?;
    if !(lambda_f > 0.0 && mu > 0.0) {
        return Err(SimError::InvalidRate(format!(
            "lambda_f = {lambda_f}, mu = {mu}"
        )));
    }
    check_rate(source, lambda_f + mu)?;
    let mut level = k as i64;
    let mut time = 0.0;
    let mut events = 0u64;
    while level > 0 {
        let mark = source.next_mark();
        events += 1;
        time += mark.wait;
        if time > horizon {
            return Ok(SurvivalSample::censored(horizon, events));
        }
        level += if mark.height < lambda_f { 1 } else { -1 };
    }
    Ok(SurvivalSample::finite(time, events))
}

/// Result of driving the full process and the reduced walk with the same
/// marks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub tagged: SurvivalSample,
    pub walk: SurvivalSample,
    /// Index of the first event at which the walk differed from the number
    /// of living fitnesses `<= f`.
    pub first_mismatch: Option<u64>,
}

impl CoupledRun {
    pub fn agreed(&self) -> bool {
        self.first_mismatch.is_none() && self.tagged == self.walk
    }
}

/// Runs the full process and the reduced walk on one mark stream until the
/// tagged species dies, `horizon` passes, or `max_events` marks are used.
pub fn run_coupled<M: MarkSource + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    max_events: u64,
    source: &mut M,
) -> Result<CoupledRun, SimError> {
    check_horizon(horizon)?;
    check_rate(source, params.total_rate())?;
    let lambda_f = params.effective_birth_rate();
    let (mut state, tagged) = initial_state(params, source);
    let mut walk = params.k as i64;
    let mut first_mismatch = None;
    let mut tagged_out = None;
    let mut walk_out = None;
    let mut events = 0u64;

    while events < max_events && (tagged_out.is_none() || walk_out.is_none()) {
        let mark = source.next_mark();
        events += 1;
        state.time += mark.wait;
        if state.time > horizon {
            break;
        }
        let event = apply_mark(&mut state, params.lambda, &params.dist, mark);
        if tagged_out.is_none() {
            if let Event::Death {
                removed: Some((_, entry)),
            } = event
            {
                if entry == tagged {
                    tagged_out = Some(SurvivalSample::finite(state.time, events));
                }
            }
        }
        if walk > 0 {
            if mark.height < lambda_f {
                walk += 1;
            } else if mark.height >= params.lambda {
                walk -= 1;
            }
            if walk == 0 {
                walk_out = Some(SurvivalSample::finite(state.time, events));
            }
        }
        let consistent = match tagged_out {
            None => walk > 0 && walk as usize == state.living.count_le(params.fitness),
            Some(_) => walk == 0,
        };
        if !consistent && first_mismatch.is_none() {
            first_mismatch = Some(events);
        }
    }

    let end = if state.time > horizon {
        horizon
    } else {
        state.time
    };
    Ok(CoupledRun {
        tagged: tagged_out.unwrap_or(SurvivalSample::censored(end, events)),
        walk: walk_out.unwrap_or(SurvivalSample::censored(end, events)),
        first_mismatch,
    })
}

/// `true` iff the walk tracks the number of living fitnesses `<= f` at every
/// event and both hit their end at the same event.
pub fn coupled_equality_check<M: MarkSource + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    max_events: u64,
    source: &mut M,
) -> Result<bool, SimError> {
    run_coupled(params, horizon, max_events, source).map(|r| r.agreed())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationObservation {
    pub t_end: f64,
    pub critical_fitness: f64,
    pub window: (f64, f64),
    /// `(time, |L_t|)` on an even grid over `[0, t_end]`.
    pub l_trace: Vec<(f64, usize)>,
    /// Living species with fitness in the open window at `t_end`.
    pub r_window_count: usize,
    /// Number of times the population below `f_c` became empty.
    pub empty_l_episodes: usize,
    pub final_population: usize,
    pub events: u64,
}

/// Runs the full process from an empty population up to `t_end`.
pub fn observe_population<M: MarkSource + ?Sized>(
    lambda: f64,
    mu: f64,
    dist: &FitnessDistribution,
    t_end: f64,
    window: (f64, f64),
    trace_points: usize,
    source: &mut M,
) -> Result<PopulationObservation, SimError> {
    let critical =
        critical_fitness(lambda, mu, dist).ok_or(SimError::NotSupercritical { lambda, mu })?;
    let (a, b) = window;
    if !(a >= critical && a < b) {
        return Err(SimError::InvalidWindow { a, b, critical });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SimError::InvalidHorizon(t_end));
    }
    check_rate(source, lambda + mu)?;

    let grid: Vec<f64> = (0..=trace_points)
        .map(|i| {
            if trace_points == 0 {
                0.0
            } else {
                t_end * i as f64 / trace_points as f64
            }
        })
        .collect();
    let mut trace = Vec::with_capacity(grid.len());
    let mut state = ProcessState::new();
    let mut below = 0usize;
    let mut returns = 0usize;
    let mut events = 0u64;

    if t_end > 0.0 {
        loop {
            let mark = source.next_mark();
            let next = state.time + mark.wait;
            while trace.len() < grid.len() && grid[trace.len()] < next.min(t_end) {
                trace.push((grid[trace.len()], below));
            }
            if next > t_end {
                break;
            }
            events += 1;
            state.time = next;
            match apply_mark(&mut state, lambda, dist, mark) {
                Event::Birth { fitness, .. } if fitness < critical => below += 1,
                Event::Death {
                    removed: Some((v, _)),
                } if v < critical => {
                    below -= 1;
                    if below == 0 {
                        returns += 1;
                    }
                }
                _ => {}
            }
        }
    }
    while trace.len() < grid.len() {
        trace.push((grid[trace.len()], below));
    }

    Ok(PopulationObservation {
        t_end,
        critical_fitness: critical,
        window,
        l_trace: trace,
        r_window_count: state.living.count_between(a, b),
        empty_l_episodes: returns,
        final_population: state.living.len(),
        events,
    })
}

/// `n` independent survival samples; run `i` uses stream `i` of `seed`.
/// Runs on the current rayon pool; output order follows the run index.
pub fn sample_survival_batch(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    n: usize,
) -> Result<Vec<SurvivalSample>, SimError> {
    check_horizon(horizon)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = MarkStream::for_model(seed, i, params)?;
            simulate_survival_time(params, horizon, &mut stream)
        })
        .collect()
}

/// Walk-based counterpart of [`sample_survival_batch`].
pub fn sample_walk_batch(
    lambda_f: f64,
    mu: f64,
    k: u32,
    horizon: f64,
    seed: u64,
    n: usize,
) -> Result<Vec<SurvivalSample>, SimError> {
    check_horizon(horizon)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = MarkStream::new(seed, i, lambda_f + mu)?;
            simulate_walk_hitting(lambda_f, mu, k, horizon, &mut stream)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> FitnessDistribution {
        FitnessDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn params(lambda: f64, f: f64, k: u32) -> ModelParams {
        ModelParams::new(lambda, 1.0, unit(), k, f).unwrap()
    }

    fn death(wait: f64) -> Mark {
        Mark { wait, height: 2.5 }
    }

    #[test]
    fn death_on_empty_population_is_ignored() {
        let mut state = ProcessState::new();
        let mut src = ScriptedMarks::new([death(0.4)]);
        let ev = step(&mut state, 2.0, &unit(), &mut src);
        assert_eq!(ev, Event::Death { removed: None });
        assert_eq!(state.count(), 0);
        assert_eq!(state.time, 0.4);
    }

    #[test]
    fn death_removes_minimum() {
        let mut state = ProcessState::with_fitnesses([0.7, 0.3]);
        step(
            &mut state,
            2.0,
            &unit(),
            &mut ScriptedMarks::new([death(1.0)]),
        );
        assert_eq!(state.living.to_sorted_vec(), vec![0.7]);
    }

    #[test]
    fn birth_inserts_quantile_of_height() {
        let mut state = ProcessState::with_fitnesses([0.3]);
        let mark = Mark {
            wait: 0.1,
            height: 1.2,
        };
        let ev = step(&mut state, 2.0, &unit(), &mut ScriptedMarks::new([mark]));
        assert!(matches!(ev, Event::Birth { fitness, .. } if (fitness - 0.6).abs() < 1e-15));
        assert_eq!(state.living.to_sorted_vec(), vec![0.3, 0.6]);
    }

    #[test]
    fn first_death_kills_single_species() {
        let p = params(2.0, 0.25, 1);
        let s = simulate_survival_time(&p, 10.0, &mut ScriptedMarks::new([death(0.7)])).unwrap();
        assert_eq!(s.outcome, Outcome::FiniteTime(0.7));
        assert_eq!(s.events_consumed, 1);
        let w = simulate_walk_hitting(
            0.5,
            1.0,
            1,
            10.0,
            &mut ScriptedMarks::new([Mark {
                wait: 0.7,
                height: 1.0,
            }]),
        )
        .unwrap();
        assert_eq!(w.outcome, Outcome::FiniteTime(0.7));
    }

    #[test]
    fn births_above_tagged_do_not_matter() {
        let p = params(2.0, 0.25, 1);
        // Birth at fitness 0.9, then a death.
        let marks = [
            Mark {
                wait: 0.2,
                height: 1.8,
            },
            death(0.3),
        ];
        let sub = simulate_survival_time(&p, 10.0, &mut ScriptedMarks::new(marks)).unwrap();
        let full = simulate_survival_time_full(&p, 10.0, &mut ScriptedMarks::new(marks)).unwrap();
        assert_eq!(sub, full);
        assert_eq!(sub.finite_time(), Some(0.5));
    }

    #[test]
    fn censoring_and_horizon_errors() {
        let p = params(2.0, 0.25, 1);
        let s = simulate_survival_time(&p, 1.0, &mut ScriptedMarks::new([death(2.0)])).unwrap();
        assert_eq!(s.outcome, Outcome::Censored(1.0));
        assert!(simulate_survival_time(&p, 0.0, &mut ScriptedMarks::default()).is_err());
        assert!(simulate_walk_hitting(0.5, 1.0, 1, -1.0, &mut ScriptedMarks::default()).is_err());
    }

    #[test]
    fn stream_rate_is_checked() {
        let p = params(2.0, 0.25, 1);
        let mut wrong = MarkStream::new(1, 0, 1.5).unwrap();
        assert!(matches!(
            simulate_survival_time(&p, 10.0, &mut wrong),
            Err(SimError::RateMismatch { .. })
        ));
    }

    #[test]
    fn streams_reproduce() {
        let p = params(2.0, 0.25, 3);
        let a = simulate_survival_time(&p, 50.0, &mut MarkStream::for_model(9, 4, &p).unwrap());
        let b = simulate_survival_time(&p, 50.0, &mut MarkStream::for_model(9, 4, &p).unwrap());
        let c = simulate_survival_time(&p, 50.0, &mut MarkStream::for_model(9, 5, &p).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coupling_without_births() {
        let p = params(2.0, 0.6, 3);
        let marks = [death(0.1), death(0.2), death(0.3)];
        let run = run_coupled(&p, 10.0, 100, &mut ScriptedMarks::new(marks)).unwrap();
        assert!(run.agreed());
        assert_eq!(run.tagged.finite_time(), Some(0.6000000000000001));
        assert_eq!(run.walk, run.tagged);
    }

    #[test]
    fn coupling_supercritical_escape_is_censored() {
        let p = params(2.0, 0.9, 1);
        let births = (0..50).map(|_| Mark {
            wait: 0.1,
            height: 0.5,
        });
        let run = run_coupled(&p, 3.0, 1000, &mut ScriptedMarks::new(births)).unwrap();
        assert!(run.agreed());
        assert!(run.tagged.is_censored() && run.walk.is_censored());
    }

    #[test]
    fn population_zero_time() {
        let obs = observe_population(
            2.0,
            1.0,
            &unit(),
            0.0,
            (0.6, 0.8),
            4,
            &mut MarkStream::new(1, 0, 3.0).unwrap(),
        )
        .unwrap();
        assert_eq!(obs.r_window_count, 0);
        assert_eq!(obs.empty_l_episodes, 0);
        assert_eq!(obs.events, 0);
        assert!(obs.l_trace.iter().all(|&(_, c)| c == 0));
    }

    #[test]
    fn population_rejects_bad_windows() {
        let mut s = MarkStream::new(1, 0, 3.0).unwrap();
        assert!(matches!(
            observe_population(2.0, 1.0, &unit(), 10.0, (0.4, 0.8), 4, &mut s),
            Err(SimError::InvalidWindow { .. })
        ));
        assert!(matches!(
            observe_population(1.0, 2.0, &unit(), 10.0, (0.6, 0.8), 4, &mut s),
            Err(SimError::NotSupercritical { .. })
        ));
    }

    #[test]
    fn population_trace_is_consistent() {
        let mut s = MarkStream::new(5, 0, 3.0).unwrap();
        let obs = observe_population(2.0, 1.0, &unit(), 200.0, (0.6, 0.8), 20, &mut s).unwrap();
        assert_eq!(obs.l_trace.len(), 21);
        assert!(obs.l_trace.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(obs.r_window_count <= obs.final_population);
    }
}
