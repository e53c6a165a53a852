//! Fitness distributions, the effective birth rate and the critical fitness.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// `F(f)` closer than this to 0 or 1 counts as outside the support.
const SUPPORT_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum FitnessError {
    #[error("invalid distribution spec {0:?} (expected uniform:a,b | exp:rate | table:<path>)")]
    InvalidSpec(String),
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("cdf table: {0}")]
    Table(String),
    #[error("reading cdf table: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing cdf table: {0}")]
    Csv(#[from] csv::Error),
    #[error("fitness {fitness} lies outside the support (F(f) = {cdf})")]
    OutsideSupport { fitness: f64, cdf: f64 },
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
}

/// Continuous, strictly increasing CDF on an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitnessDistribution {
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Piecewise-linear interpolation of `(x, F(x))` knots; the first knot
    /// has `F = 0` and the last `F = 1`.
    Table {
        xs: Vec<f64>,
        ps: Vec<f64>,
    },
}

impl FitnessDistribution {
    pub fn uniform(low: f64, high: f64) -> Result<Self, FitnessError> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(FitnessError::InvalidParameter(format!(
                "uniform needs finite low < high, got {low}, {high}"
            )));
        }
        Ok(Self::Uniform { low, high })
    }

    pub fn exponential(rate: f64) -> Result<Self, FitnessError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(FitnessError::InvalidParameter(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn table(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self, FitnessError> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(FitnessError::Table(
                "need at least two (x, F(x)) rows".into(),
            ));
        }
        if xs.iter().chain(&ps).any(|v| !v.is_finite()) {
            return Err(FitnessError::Table("non-finite entry".into()));
        }
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !strictly_increasing(&xs) || !strictly_increasing(&ps) {
            return Err(FitnessError::Table(
                "both columns must be strictly increasing".into(),
            ));
        }
        if ps[0] != 0.0 || ps[ps.len() - 1] != 1.0 {
            return Err(FitnessError::Table("F must run from 0 to 1".into()));
        }
        Ok(Self::Table { xs, ps })
    }

    /// Reads a headerless two-column CSV of `(x, F(x))`.
    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self, FitnessError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        for record in reader.deserialize() {
            let (x, p): (f64, f64) = record?;
            xs.push(x);
            ps.push(p);
        }
        Self::table(xs, ps)
    }

    /// Parses `uniform:a,b`, `exp:rate` or `table:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self, FitnessError> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| FitnessError::InvalidSpec(spec.to_string()))?;
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| FitnessError::InvalidSpec(spec.to_string()))
        };
        match kind.trim() {
            "uniform" => {
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| FitnessError::InvalidSpec(spec.to_string()))?;
                Self::uniform(number(a)?, number(b)?)
            }
            "exp" => Self::exponential(number(rest)?),
            "table" if !rest.is_empty() => Self::from_table_file(rest),
            _ => Err(FitnessError::InvalidSpec(spec.to_string())),
        }
    }

    /// Closed interval hull of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { low, high } => (*low, *high),
            Self::Exponential { .. } => (0.0, f64::INFINITY),
            Self::Table { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Table { xs, ps } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= xs[xs.len() - 1] {
                    return 1.0;
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ps[i] + w * (ps[i + 1] - ps[i])
            }
        }
    }

    /// Inverse CDF; `p` is clamped to `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Self::Uniform { low, high } => low + p * (high - low),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Table { xs, ps } => {
                if p >= 1.0 {
                    return xs[xs.len() - 1];
                }
                let i = ps.partition_point(|&v| v <= p) - 1;
                let w = (p - ps[i]) / (ps[i + 1] - ps[i]);
                xs[i] + w * (xs[i + 1] - xs[i])
            }
        }
    }

    /// One draw by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// One draw conditioned on lying below `f`: `quantile(U * F(f))`.
    pub fn sample_below<R: Rng + ?Sized>(&self, f: f64, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>() * self.cdf(f))
    }
}

impl fmt::Display for FitnessDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Table { xs, .. } => write!(f, "table[{} knots]", xs.len()),
        }
    }
}

impl FromStr for FitnessDistribution {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_spec(s)
    }
}

/// Position of the tagged species relative to the critical fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `lambda_f < mu`: extinction a.s., exponential tail.
    Subcritical,
    /// `lambda_f == mu` up to `1e-12` relative.
    Critical,
    /// `lambda_f > mu`: survives forever with positive probability.
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

pub fn classify_regime(lambda_f: f64, mu: f64) -> Regime {
    let eps = 1e-12 * lambda_f.max(mu);
    if lambda_f < mu - eps {
        Regime::Subcritical
    } else if lambda_f > mu + eps {
        Regime::Supercritical
    } else {
        Regime::Critical
    }
}

/// `lambda * F(f)`, rejecting fitnesses at or beyond the support edges.
pub fn effective_birth_rate(
    lambda: f64,
    dist: &FitnessDistribution,
    fitness: f64,
) -> Result<f64, FitnessError> {
    let cdf = dist.cdf(fitness);
    if !(cdf > SUPPORT_TOL && cdf < 1.0 - SUPPORT_TOL) {
        return Err(FitnessError::OutsideSupport { fitness, cdf });
    }
    Ok(lambda * cdf)
}

/// `F^-1(mu / lambda)` when `lambda > mu`, otherwise `None`.
pub fn critical_fitness(lambda: f64, mu: f64, dist: &FitnessDistribution) -> Option<f64> {
    (lambda > mu).then(|| dist.quantile(mu / lambda))
}

/// Birth rate, death rate, fitness law, initial count and tagged fitness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: f64,
    pub dist: FitnessDistribution,
    pub k: u32,
    pub fitness: f64,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        mu: f64,
        dist: FitnessDistribution,
        k: u32,
        fitness: f64,
    ) -> Result<Self, FitnessError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(FitnessError::InvalidModel(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(FitnessError::InvalidModel(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if k == 0 || k > crate::special_functions::MAX_ORDER {
            return Err(FitnessError::InvalidModel(format!(
                "k must be in 1..={}, got {k}",
                crate::special_functions::MAX_ORDER
            )));
        }
        effective_birth_rate(lambda, &dist, fitness)?;
        Ok(Self {
            lambda,
            mu,
            dist,
            k,
            fitness,
        })
    }

    pub fn effective_birth_rate(&self) -> f64 {
        self.lambda * self.dist.cdf(self.fitness)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.effective_birth_rate(), self.mu)
    }

    pub fn critical_fitness(&self) -> Option<f64> {
        critical_fitness(self.lambda, self.mu, &self.dist)
    }

    /// Total mark rate `lambda + mu` of the full process.
    pub fn total_rate(&self) -> f64 {
        self.lambda + self.mu
    }
}
