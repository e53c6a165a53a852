//! Law of the survival time of a tagged species.
//!
//! The survival time of a species with fitness `f`, started among `k`
//! species at or below `f`, is the first-passage time to 0 of a
//! continuous-time walk started at `k` that jumps at rate
//! `c = lambda_f + mu`, up with probability `p = lambda_f / c` and down with
//! probability `q = mu / c`. Its (possibly defective) density is
//!
//! ```text
//! phi(t) = (mu/lambda_f)^(k/2) e^(-c t) (k/t) I_k(2 sqrt(mu lambda_f) t)
//! ```
//!
//! Two independent evaluation routes are provided: quadrature of `phi`
//! ([`SurvivalLaw::survival_tail`], [`SurvivalLaw::head_cdf`]) and the
//! mixture of Gamma laws over the discrete hitting-time distribution
//! ([`SurvivalLaw::cdf_series`]).

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::fitness_model::{classify_regime, ModelParams, Regime};
use crate::quadrature::{self, QuadError};
use crate::special_functions::{self, ln_factorial, BesselError};

/// Default relative tolerance of the quadrature route.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 2_000;
const AUTO_SERIES_TERMS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid survival law parameter: {0}")]
    InvalidParameter(String),
    #[error("time must be {expect}, got {got}")]
    InvalidTime { expect: &'static str, got: f64 },
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("series not truncated after {terms} terms (remainder bound {bound:e})")]
    SeriesTruncation { terms: usize, bound: f64 },
    #[error("probability {value} outside [{low}, {high}] beyond tolerance")]
    OutOfRange { value: f64, low: f64, high: f64 },
}

/// Mean of the survival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSurvival {
    Finite(f64),
    Infinite,
}

impl MeanSurvival {
    pub fn finite(self) -> Option<f64> {
        match self {
            MeanSurvival::Finite(m) => Some(m),
            MeanSurvival::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalLaw {
    lambda_f: f64,
    mu: f64,
    k: u32,
    rel_tol: f64,
}

impl SurvivalLaw {
    pub fn new(lambda_f: f64, mu: f64, k: u32) -> Result<Self, LawError> {
        if !(lambda_f.is_finite() && lambda_f > 0.0) {
            return Err(LawError::InvalidParameter(format!("lambda_f = {lambda_f}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(LawError::InvalidParameter(format!("mu = {mu}")));
        }
        if k == 0 || k > special_functions::MAX_ORDER {
            return Err(LawError::InvalidParameter(format!("k = {k}")));
        }
        Ok(Self {
            lambda_f,
            mu,
            k,
            rel_tol: DEFAULT_QUAD_TOL,
        })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self, LawError> {
        Self::new(params.effective_birth_rate(), params.mu, params.k)
    }

    /// Overrides the quadrature/series tolerance (in `(0, 1e-3]`).
    pub fn with_tolerance(mut self, rel_tol: f64) -> Result<Self, LawError> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
            return Err(LawError::InvalidParameter(format!("rel_tol = {rel_tol}")));
        }
        self.rel_tol = rel_tol;
        Ok(self)
    }

    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Jump rate `c = lambda_f + mu` of the reduced walk.
    pub fn c(&self) -> f64 {
        self.lambda_f + self.mu
    }

    pub fn p(&self) -> f64 {
        self.lambda_f / self.c()
    }

    pub fn q(&self) -> f64 {
        self.mu / self.c()
    }

    /// Exponential decay rate `(sqrt(mu) - sqrt(lambda_f))^2`.
    pub fn gamma(&self) -> f64 {
        (self.mu.sqrt() - self.lambda_f.sqrt()).powi(2)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.lambda_f, self.mu)
    }

    fn bessel_tol(&self) -> f64 {
        (self.rel_tol * 1e-2).clamp(1e-15, special_functions::DEFAULT_REL_TOL)
    }

    /// `P(tau = infinity)`.
    pub fn defect(&self) -> f64 {
        if self.regime() == Regime::Supercritical {
            -(self.k as f64 * (self.mu / self.lambda_f).ln()).exp_m1()
        } else {
            0.0
        }
    }

    /// `P(tau < infinity) = 1 - defect`, computed without cancellation.
    fn finite_mass(&self) -> f64 {
        if self.regime() == Regime::Supercritical {
            (self.k as f64 * (self.mu / self.lambda_f).ln()).exp()
        } else {
            1.0
        }
    }

    fn ln_density(&self, t: f64) -> f64 {
        let x = 2.0 * (self.mu * self.lambda_f).sqrt() * t;
        let kf = self.k as f64;
        match special_functions::ln_bessel_i_scaled(self.k, x, self.bessel_tol()) {
            Ok(ln_i) => {
                0.5 * kf * (self.mu / self.lambda_f).ln() - self.gamma() * t + (kf / t).ln() + ln_i
            }
            Err(_) => f64::NAN,
        }
    }

    /// Integrand of the survival formula; a density when `lambda_f <= mu`.
    pub fn density(&self, t: f64) -> Result<f64, LawError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LawError::InvalidTime {
                expect: "positive and finite",
                got: t,
            });
        }
        let x = 2.0 * (self.mu * self.lambda_f).sqrt() * t;
        special_functions::ln_bessel_i_scaled(self.k, x, self.bessel_tol())?;
        Ok(self.ln_density(t).exp())
    }

    /// `int_0^u phi` for `u <= 1/c` from the power series of `phi` around 0.
    fn head_series(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let k = self.k as f64;
        let w = self.c() * u;
        let z = self.mu * self.lambda_f * u * u;
        let prefactor = (k * (self.mu * u).ln() - ln_factorial(self.k as u64 - 1)).exp();

        // int_0^1 s^m e^(-w s) ds
        let moment = |m: f64| {
            let mut term = 1.0_f64;
            let mut total = 1.0 / (m + 1.0);
            let mut i = 0.0;
            loop {
                i += 1.0;
                term *= -w / i;
                let piece = term / (m + i + 1.0);
                total += piece;
                if piece.abs() <= 1e-18 * total.abs() {
                    break total;
                }
            }
        };

        let mut beta = 1.0_f64;
        let mut sum = 0.0;
        let mut l = 0.0;
        loop {
            let piece = beta * moment(2.0 * l + k - 1.0);
            sum += piece;
            if piece <= 1e-18 * sum {
                break;
            }
            l += 1.0;
            beta *= z / ((l + k) * l);
        }
        prefactor * sum
    }

    fn check_probability(&self, value: f64, low: f64, high: f64) -> Result<f64, LawError> {
        let slack = 10.0 * self.rel_tol;
        if value < low - slack || value > high + slack || value.is_nan() {
            return Err(LawError::OutOfRange { value, low, high });
        }
        Ok(value.clamp(low, high))
    }

    /// `P(tau <= t) = int_0^t phi`: power series on `[0, min(t, 1/c)]`
    /// and adaptive quadrature beyond.
    pub fn head_cdf(&self, t: f64) -> Result<f64, LawError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(LawError::InvalidTime {
                expect: "non-negative and finite",
                got: t,
            });
        }
        let split = t.min(1.0 / self.c());
        let mut head = self.head_series(split);
        if t > split {
            let r = quadrature::integrate(
                |u| self.ln_density(u).exp(),
                split,
                t,
                self.rel_tol,
                0.0,
                MAX_INTERVALS,
            )?;
            head += r.value;
        }
        self.check_probability(head, 0.0, self.finite_mass())
    }

    /// `int_t^inf phi`, integrated in `s` with `u = t / s^2`.
    pub fn tail_integral(&self, t: f64) -> Result<f64, LawError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LawError::InvalidTime {
                expect: "positive and finite",
                got: t,
            });
        }
        let r = quadrature::integrate(
            |s| {
                let u = t / (s * s);
                if !u.is_finite() {
                    return 0.0;
                }
                let ln = self.ln_density(u);
                if ln == f64::NEG_INFINITY {
                    0.0
                } else {
                    (ln + (2.0 * t / (s * s * s)).ln()).exp()
                }
            },
            0.0,
            1.0,
            self.rel_tol,
            f64::MIN_POSITIVE,
            MAX_INTERVALS,
        )?;
        Ok(r.value)
    }

    /// `P(tau > t)`, clamped to `[defect, 1]`.
    pub fn survival_tail(&self, t: f64) -> Result<f64, LawError> {
        if t.is_nan() || t < 0.0 {
            return Err(LawError::InvalidTime {
                expect: "non-negative",
                got: t,
            });
        }
        let defect = self.defect();
        if t == f64::INFINITY {
            return Ok(defect);
        }
        let value = if t * self.c() <= 1.0 {
            1.0 - self.head_series(t)
        } else {
            defect + self.tail_integral(t)?
        };
        self.check_probability(value, defect, 1.0)
    }

    /// `P(tau <= t)` at each of the ascending `times`, by accumulating the
    /// integral between consecutive points.
    pub fn cdf_sorted(&self, times: &[f64]) -> Result<Vec<f64>, LawError> {
        let mut out = Vec::with_capacity(times.len());
        let Some(&first) = times.first() else {
            return Ok(out);
        };
        if times
            .windows(2)
            .any(|w| w[0].is_nan() || w[1].is_nan() || w[0] > w[1])
        {
            return Err(LawError::InvalidParameter("times must be ascending".into()));
        }
        let mut acc = 1.0 - self.survival_tail(first)?;
        let mut prev = first;
        out.push(acc);
        for &t in &times[1..] {
            if t > prev {
                let r = quadrature::integrate(
                    |u| self.ln_density(u).exp(),
                    prev,
                    t,
                    self.rel_tol,
                    1e-15,
                    MAX_INTERVALS,
                )?;
                acc += r.value;
                prev = t;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }

    /// Gamma-mixture form of `P(tau <= t)`:
    /// `sum_n P(H_0 = n) P(Gamma(n, c) <= t)`.
    ///
    /// `t` may be `+inf`. `n_max = None` sums until the remainder bound
    /// drops below the tolerance.
    pub fn cdf_series(&self, t: f64, n_max: Option<usize>) -> Result<f64, LawError> {
        if t.is_nan() || t < 0.0 {
            return Err(LawError::InvalidTime {
                expect: "non-negative",
                got: t,
            });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let (p, q, k) = (self.p(), self.q(), self.k as u64);
        let x = self.c() * t;
        let total = self.finite_mass();
        let cap = n_max.unwrap_or(AUTO_SERIES_TERMS);

        let mut sum = 0.0;
        let mut mass = 0.0;
        let mut n = k;
        let mut terms = 0usize;
        loop {
            let pmf = hitting_pmf_discrete(self.k, n, p, q);
            sum += pmf * gamma_cdf_integer(n, x);
            mass += pmf;
            terms += 1;
            let remaining = (total - mass).clamp(0.0, 1.0);
            let bound = remaining * gamma_cdf_integer(n + 2, x);
            if bound <= 1e-3 * self.rel_tol * sum || bound < f64::MIN_POSITIVE {
                break;
            }
            if terms >= cap {
                return Err(LawError::SeriesTruncation { terms, bound });
            }
            n += 2;
        }
        self.check_probability(sum, 0.0, total)
    }

    /// `C_k` of the large-time tail; `None` in the critical regime.
    pub fn asymptotic_constant(&self) -> Option<f64> {
        if self.regime() == Regime::Critical {
            return None;
        }
        let k = self.k as f64;
        Some(
            k / (2.0 * PI.sqrt())
                * (0.5 * k * (self.mu / self.lambda_f).ln()).exp()
                * (self.mu * self.lambda_f).powf(-0.25)
                / self.gamma(),
        )
    }

    /// Large-`t` approximation of `P(t < tau < infinity)`.
    pub fn asymptotic_excess(&self, t: f64) -> f64 {
        match self.asymptotic_constant() {
            Some(ck) => ck * (-self.gamma() * t).exp() / t.powf(1.5),
            None => self.k as f64 / (PI * self.mu * t).sqrt(),
        }
    }

    /// Large-`t` approximation of `P(tau > t)` (includes the defect).
    pub fn tail_asymptotic(&self, t: f64) -> f64 {
        self.defect() + self.asymptotic_excess(t)
    }

    /// `E[e^(-s tau_1)]` for a single species.
    pub fn mgf(&self, s: f64) -> f64 {
        let root_product = (self.mu * self.lambda_f).sqrt();
        let lo = self.c() - 2.0 * root_product;
        let hi = self.c() + 2.0 * root_product;
        let radical = ((s + lo) * (s + hi)).sqrt();
        2.0 * self.mu / (radical + s + self.c())
    }

    /// `E[e^(-s tau_k)] = mgf(s)^k`.
    pub fn mgf_k(&self, s: f64) -> f64 {
        self.mgf(s).powi(self.k as i32)
    }

    /// Derivative of [`Self::mgf`] in `s`.
    pub fn mgf_derivative(&self, s: f64) -> f64 {
        let root_product = (self.mu * self.lambda_f).sqrt();
        let lo = self.c() - 2.0 * root_product;
        let hi = self.c() + 2.0 * root_product;
        let radical = ((s + lo) * (s + hi)).sqrt();
        let denom = radical + s + self.c();
        -2.0 * self.mu * ((s + self.c()) / radical + 1.0) / (denom * denom)
    }

    /// `-k M'(0)`; infinite unless subcritical.
    pub fn mean_survival(&self) -> MeanSurvival {
        if self.regime() == Regime::Subcritical {
            MeanSurvival::Finite(-(self.k as f64) * self.mgf_derivative(0.0))
        } else {
            MeanSurvival::Infinite
        }
    }

    /// The value `2 k mu / (mu - lambda_f)`, kept for comparison against
    /// [`Self::mean_survival`]. `None` unless subcritical.
    pub fn doubled_mean_formula(&self) -> Option<f64> {
        (self.regime() == Regime::Subcritical)
            .then(|| 2.0 * self.k as f64 * self.mu / (self.mu - self.lambda_f))
    }
}

/// `P(H_0 = n | X_0 = k)` for the discrete walk with up-probability `p` and
/// down-probability `q` (`p + q = 1`): `(k/n) C(n, (n+k)/2) q^((n+k)/2)
/// p^((n-k)/2)` when `n >= k` and `n + k` is even, else 0.
pub fn hitting_pmf_discrete(k: u32, n: u64, p: f64, q: f64) -> f64 {
    let k = k as u64;
    if k == 0 || n < k || (n + k) % 2 == 1 {
        return 0.0;
    }
    let downs = (n + k) / 2;
    let ups = (n - k) / 2;
    let ln_pow = |count: u64, prob: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * prob.ln()
        }
    };
    let ln = (k as f64 / n as f64).ln() + ln_factorial(n) - ln_factorial(downs) - ln_factorial(ups)
        + ln_pow(downs, q)
        + ln_pow(ups, p);
    ln.exp()
}

/// `P(Gamma(n, 1) <= x)` for integer shape, i.e. `P(Poisson(x) >= n)`.
pub(crate) fn gamma_cdf_integer(n: u64, x: f64) -> f64 {
    if n == 0 || x == f64::INFINITY {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    let poisson = |j: u64| (j as f64 * ln_x - x - ln_factorial(j)).exp();
    if n as f64 > x {
        // Upper Poisson tail, terms decrease from j = n.
        let mut term = poisson(n);
        let mut sum = term;
        let mut j = n as f64;
        loop {
            j += 1.0;
            term *= x / j;
            sum += term;
            if term <= 1e-17 * sum {
                break sum.min(1.0);
            }
        }
    } else {
        // 1 - lower Poisson sum, terms decrease from j = n - 1 downward.
        let mut term = poisson(n - 1);
        let mut sum = term;
        let mut j = (n - 1) as f64;
        while j > 0.0 {
            term *= j / x;
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            j -= 1.0;
        }
        (1.0 - sum).max(0.0)
    }
}
