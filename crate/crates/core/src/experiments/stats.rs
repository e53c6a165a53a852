//! Empirical tails, binomial intervals and Kolmogorov-Smirnov distances.

use serde::Serialize;
use thiserror::Error;

use crate::simulator::{Outcome, SurvivalSample};
use crate::survival_law::{LawError, SurvivalLaw};

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Fewest finite samples accepted by the KS comparison.
pub const MIN_KS_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("t = {t} exceeds the censoring horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("KS needs at least {MIN_KS_SAMPLES} finite samples, got {0}")]
    TooFewFinite(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The bounds are exact at the edges; avoid rounding residue there.
    Interval {
        lo: if successes == 0 {
            0.0
        } else {
            (centre - half).max(0.0)
        },
        hi: if p == 1.0 {
            1.0
        } else {
            (centre + half).min(1.0)
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub estimate: f64,
    pub ci: Interval,
}

/// Fraction of samples still alive at `t`, with a Wilson 95% interval.
/// Censored samples count as surviving, so `t` may not exceed any of their
/// horizons.
pub fn empirical_tail(samples: &[SurvivalSample], t: f64) -> Result<TailEstimate, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut alive = 0usize;
    for s in samples {
        match s.outcome {
            Outcome::FiniteTime(x) if x > t => alive += 1,
            Outcome::FiniteTime(_) => {}
            Outcome::Censored(h) if t > h => {
                return Err(StatsError::BeyondHorizon { t, horizon: h });
            }
            Outcome::Censored(_) => alive += 1,
        }
    }
    Ok(TailEstimate {
        estimate: alive as f64 / samples.len() as f64,
        ci: wilson_interval(alive, samples.len(), Z_95),
    })
}

/// Sup distance between the empirical CDF of ascending `sorted` and the
/// reference CDF values `cdf_at[i] = F(sorted[i])`.
pub fn ks_distance(sorted: &[f64], cdf_at: &[f64]) -> Result<f64, StatsError> {
    if sorted.len() < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewFinite(sorted.len()));
    }
    assert_eq!(sorted.len(), cdf_at.len(), "one CDF value per sample");
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        // Equal sample values form one jump of the empirical CDF.
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf_at[i];
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Asymptotic Kolmogorov critical value `sqrt(-ln(alpha/2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    Ok((-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub finite_samples: usize,
    /// `P(tau <= horizon)` used to condition the analytic CDF.
    pub conditioning_mass: f64,
    pub passed: bool,
}

/// KS test of the finite sample times against the analytic law conditioned
/// on `tau <= horizon`.
pub fn ks_against_law(
    samples: &[SurvivalSample],
    law: &SurvivalLaw,
    horizon: f64,
    alpha: f64,
) -> Result<KsResult, StatsError> {
    let mut times: Vec<f64> = samples.iter().filter_map(|s| s.finite_time()).collect();
    if times.len() < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewFinite(times.len()));
    }
    times.sort_by(f64::total_cmp);
    let mass = 1.0 - law.survival_tail(horizon)?;
    let cdf: Vec<f64> = law
        .cdf_sorted(&times)?
        .into_iter()
        .map(|v| (v / mass).min(1.0))
        .collect();
    let statistic = ks_distance(&times, &cdf)?;
    let critical_value = ks_critical_value(times.len(), alpha)?;
    Ok(KsResult {
        statistic,
        critical_value,
        alpha,
        finite_samples: times.len(),
        conditioning_mass: mass,
        passed: statistic <= critical_value,
    })
}

/// Whether `p` lies in the 3-sigma Wilson interval of `successes / n`.
pub fn binomial_consistent(successes: usize, n: usize, p: f64) -> bool {
    wilson_interval(successes, n, 3.0).contains(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.len() < 2 {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(Self {
            mean,
            std_error: (var / n).sqrt(),
            n: values.len(),
        })
    }

    pub fn interval(&self, sigmas: f64) -> Interval {
        Interval {
            lo: self.mean - sigmas * self.std_error,
            hi: self.mean + sigmas * self.std_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(t: f64) -> SurvivalSample {
        SurvivalSample {
            outcome: Outcome::FiniteTime(t),
            events_consumed: 1,
        }
    }

    fn censored(h: f64) -> SurvivalSample {
        SurvivalSample {
            outcome: Outcome::Censored(h),
            events_consumed: 1,
        }
    }

    #[test]
    fn all_censored_tail_is_one() {
        let s = vec![censored(10.0); 5];
        assert_eq!(empirical_tail(&s, 3.0).unwrap().estimate, 1.0);
        assert_eq!(empirical_tail(&s, 10.0).unwrap().estimate, 1.0);
        assert!(matches!(
            empirical_tail(&s, 11.0),
            Err(StatsError::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn tail_of_four_points() {
        let s: Vec<_> = [1.0, 2.0, 3.0, 4.0].into_iter().map(finite).collect();
        let e = empirical_tail(&s, 2.5).unwrap();
        assert_eq!(e.estimate, 0.5);
        assert!(e.ci.lo < 0.5 && 0.5 < e.ci.hi);
        assert!(matches!(empirical_tail(&[], 1.0), Err(StatsError::Empty)));
    }

    #[test]
    fn wilson_known_value() {
        // 8 of 10 at 95%: (0.4902, 0.9433).
        let ci = wilson_interval(8, 10, Z_95);
        assert!((ci.lo - 0.490_16).abs() < 1e-4);
        assert!((ci.hi - 0.943_32).abs() < 1e-4);
        let edge = wilson_interval(0, 50, Z_95);
        assert_eq!(edge.lo, 0.0);
        assert!(edge.hi > 0.0);
    }

    #[test]
    fn ks_of_reference_at_step_tops_is_one_over_n() {
        // Reference touching the top of every empirical step: the gap sits
        // entirely on the left limits.
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let upper: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let d = ks_distance(&xs, &upper).unwrap();
        assert!((d - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn ks_rejects_small_samples() {
        assert!(matches!(
            ks_distance(&[1.0; 10], &[0.5; 10]),
            Err(StatsError::TooFewFinite(10))
        ));
    }

    #[test]
    fn critical_value_constant() {
        let c = ks_critical_value(1, 0.01).unwrap();
        assert!((c - 1.627_6).abs() < 1e-4);
        assert!(ks_critical_value(10, 0.0).is_err());
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(MeanEstimate::from_values(&[1.0]).is_none());
    }
}
