//! Modified Bessel function of the first kind for integer order.
//!
//! Everything is evaluated from the power series
//!
//! ```text
//! I_k(x) = sum_{l >= 0} (x/2)^(2l+k) / ((l+k)! l!)
//! ```
//!
//! Internally a value is carried as `sum * exp(lead)`, where `lead` is the
//! logarithm of one reference term already multiplied by `e^(-x)`. Small
//! arguments start the series at `l = 0`; larger ones start at the largest
//! term and sum outwards in both directions, so no intermediate quantity
//! ever leaves the normal floating range. Very large arguments switch to the
//! Hankel expansion of `e^(-x) I_k(x)`.

use thiserror::Error;

/// Default relative tolerance used throughout the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Largest accepted order.
pub const MAX_ORDER: u32 = 10_000;

const MAX_REL_TOL: f64 = 1e-3;

/// Arguments up to `DIRECT_MARGIN + k` use the series from its first term.
const DIRECT_MARGIN: f64 = 30.0;

/// Beyond this argument (and `x >= HANKEL_ORDER_FACTOR * k^2`) the Hankel
/// expansion is used instead of the series.
const HANKEL_MIN_ARG: f64 = 1e5;
const HANKEL_ORDER_FACTOR: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("relative tolerance {0} outside (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("argument {0} must be finite and non-negative")]
    InvalidArgument(f64),
    #[error("order {0} exceeds the supported maximum of {MAX_ORDER}")]
    OrderTooLarge(u32),
    #[error("I_{order}({argument}) overflows f64; use the scaled form")]
    Overflow { order: u32, argument: f64 },
    #[error("asymptotic bounds need order >= 1, got {0}")]
    BoundOrder(u32),
    #[error("asymptotic bounds for order {order} need x > {threshold}, got {argument}")]
    BelowBoundThreshold {
        order: u32,
        argument: f64,
        threshold: f64,
    },
}

/// Full result of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    /// `I_k(x)`; `f64::INFINITY` when not representable.
    pub value: f64,
    /// `e^(-x) I_k(x)`.
    pub scaled_value: f64,
    pub terms_used: usize,
    pub est_rel_error: f64,
}

/// `I_k(x)` as `sum * exp(lead + x)`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    lead: f64,
    sum: f64,
    terms: usize,
    rel_err: f64,
}

impl Scaled {
    fn ln_scaled(&self) -> f64 {
        self.lead + self.sum.ln()
    }

    fn scaled(&self) -> f64 {
        self.sum * self.lead.exp()
    }
}

fn check_inputs(k: u32, x: f64, rel_tol: f64) -> Result<(), BesselError> {
    if !(rel_tol > 0.0 && rel_tol <= MAX_REL_TOL) {
        return Err(BesselError::InvalidTolerance(rel_tol));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(BesselError::InvalidArgument(x));
    }
    if k > MAX_ORDER {
        return Err(BesselError::OrderTooLarge(k));
    }
    Ok(())
}

/// `ln n!`, exact product below 16 and a Stirling series above.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 16 {
        let mut p = 1.0_f64;
        for i in 2..=n {
            p *= i as f64;
        }
        p.ln()
    } else {
        let nf = n as f64;
        nf * nf.ln() - nf + 0.5 * (std::f64::consts::TAU * nf).ln() + stirling_correction(nf)
    }
}

fn stirling_correction(n: f64) -> f64 {
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// `n ln(x/2) - ln n! - x/2`, arranged so that the large pieces cancel
/// analytically when `n` is close to `x/2`.
fn half_log_term(n: u64, x: f64) -> f64 {
    if n < 16 {
        let nf = n as f64;
        let lf = if n == 0 { 0.0 } else { nf * (0.5 * x).ln() };
        lf - ln_factorial(n) - 0.5 * x
    } else {
        let nf = n as f64;
        let u = (2.0 * nf - x) / x;
        0.5 * u * x
            - nf * u.ln_1p()
            - 0.5 * (std::f64::consts::TAU * nf).ln()
            - stirling_correction(nf)
    }
}

fn rounding_estimate(terms: usize) -> f64 {
    f64::EPSILON * (2.0 * (terms as f64).sqrt() + 4.0)
}

/// Series from `l = 0` upward; only a fixed number of terms when `max_terms`
/// is given.
fn direct_series(k: u32, x: f64, rel_tol: f64, max_terms: Option<usize>) -> Scaled {
    let kf = k as f64;
    let q = 0.25 * x * x;
    let lead = half_log_term(k as u64, x) - 0.5 * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut l = 0.0_f64;
    let mut terms = 1usize;
    let tail = loop {
        let r_next = q / ((l + 1.0) * (l + 1.0 + kf));
        let tail = if r_next < 1.0 {
            term * r_next / (1.0 - r_next)
        } else {
            f64::INFINITY
        };
        match max_terms {
            Some(n) if terms >= n => break tail,
            None if tail <= 0.5 * rel_tol * sum => break tail,
            _ => {}
        }
        term *= r_next;
        sum += term;
        l += 1.0;
        terms += 1;
    };
    Scaled {
        lead,
        sum,
        terms,
        rel_err: tail / sum + rounding_estimate(terms),
    }
}

/// Series started at the largest term and summed outward.
fn peak_series(k: u32, x: f64, rel_tol: f64) -> Scaled {
    let kf = k as f64;
    let q = 0.25 * x * x;
    let peak = (((kf * kf + x * x).sqrt() - kf) * 0.5).floor().max(0.0) as u64;
    let lead = half_log_term(peak, x) + half_log_term(peak + k as u64, x);
    let budget = 0.25 * rel_tol;

    let mut sum = 1.0_f64;
    let mut terms = 1usize;

    // Upward: ratios strictly below one past the peak.
    let mut term = 1.0_f64;
    let mut l = peak as f64;
    let up_tail = loop {
        let r = q / ((l + 1.0) * (l + 1.0 + kf));
        let tail = if r < 1.0 {
            term * r / (1.0 - r)
        } else {
            f64::INFINITY
        };
        if tail <= budget * sum {
            break tail;
        }
        term *= r;
        sum += term;
        l += 1.0;
        terms += 1;
    };

    // Downward toward l = 0.
    let mut term = 1.0_f64;
    let mut l = peak as f64;
    let mut down_tail = 0.0;
    while l > 0.0 {
        let r = l * (l + kf) / q;
        let tail = if r < 1.0 {
            term * r / (1.0 - r)
        } else {
            f64::INFINITY
        };
        if tail <= budget * sum {
            down_tail = tail;
            break;
        }
        term *= r;
        sum += term;
        l -= 1.0;
        terms += 1;
    }

    Scaled {
        lead,
        sum,
        terms,
        rel_err: (up_tail + down_tail) / sum + rounding_estimate(terms),
    }
}

/// Hankel expansion of `e^(-x) I_k(x)`; `None` if it fails to reach the
/// tolerance before its terms start growing.
fn hankel(k: u32, x: f64, rel_tol: f64) -> Option<Scaled> {
    let mu = 4.0 * (k as f64).powi(2);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut j = 1.0_f64;
    let mut terms = 1usize;
    loop {
        let next = -term * (mu - (2.0 * j - 1.0).powi(2)) / (8.0 * j * x);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
        terms += 1;
        if term.abs() <= 0.25 * rel_tol * sum.abs() || term == 0.0 {
            break;
        }
        j += 1.0;
    }
    Some(Scaled {
        lead: -0.5 * (std::f64::consts::TAU * x).ln(),
        sum,
        terms,
        rel_err: term.abs() / sum + rounding_estimate(terms),
    })
}

fn evaluate(k: u32, x: f64, rel_tol: f64) -> Scaled {
    let kf = k as f64;
    if x <= DIRECT_MARGIN + kf {
        return direct_series(k, x, rel_tol, None);
    }
    if x > HANKEL_MIN_ARG && x >= HANKEL_ORDER_FACTOR * kf * kf {
        if let Some(s) = hankel(k, x, rel_tol) {
            return s;
        }
    }
    peak_series(k, x, rel_tol)
}

fn at_zero(k: u32) -> BesselEval {
    let v = if k == 0 { 1.0 } else { 0.0 };
    BesselEval {
        order: k,
        argument: 0.0,
        value: v,
        scaled_value: v,
        terms_used: 1,
        est_rel_error: 0.0,
    }
}

/// Evaluates `I_k(x)` together with its scaled form and error estimate.
///
/// `value` is `f64::INFINITY` when `I_k(x)` exceeds the f64 range; the
/// scaled value is always finite.
pub fn bessel_i_eval(k: u32, x: f64, rel_tol: f64) -> Result<BesselEval, BesselError> {
    check_inputs(k, x, rel_tol)?;
    if x == 0.0 {
        return Ok(at_zero(k));
    }
    let s = evaluate(k, x, rel_tol);
    let ln_value = s.ln_scaled() + x;
    let value = if ln_value < f64::MAX.ln() {
        s.sum * (s.lead + x).exp()
    } else {
        f64::INFINITY
    };
    Ok(BesselEval {
        order: k,
        argument: x,
        value,
        scaled_value: s.scaled(),
        terms_used: s.terms,
        est_rel_error: s.rel_err,
    })
}

/// `I_k(x)` to relative accuracy `rel_tol`.
///
/// Fails with [`BesselError::Overflow`] rather than returning infinity.
pub fn bessel_i(k: u32, x: f64, rel_tol: f64) -> Result<f64, BesselError> {
    let e = bessel_i_eval(k, x, rel_tol)?;
    if e.value.is_finite() {
        Ok(e.value)
    } else {
        Err(BesselError::Overflow {
            order: k,
            argument: x,
        })
    }
}

/// `e^(-x) I_k(x)`, finite for every finite `x`.
pub fn bessel_i_scaled(k: u32, x: f64, rel_tol: f64) -> Result<f64, BesselError> {
    bessel_i_eval(k, x, rel_tol).map(|e| e.scaled_value)
}

/// `ln(e^(-x) I_k(x))`; stays meaningful where the scaled value underflows.
pub fn ln_bessel_i_scaled(k: u32, x: f64, rel_tol: f64) -> Result<f64, BesselError> {
    check_inputs(k, x, rel_tol)?;
    if x == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(evaluate(k, x, rel_tol).ln_scaled())
}

/// First `terms` terms of the series for `I_k(x)` (no tolerance check).
pub fn bessel_i_partial_sum(k: u32, x: f64, terms: usize) -> Result<f64, BesselError> {
    check_inputs(k, x, DEFAULT_REL_TOL)?;
    if x == 0.0 {
        return Ok(at_zero(k).value);
    }
    let s = direct_series(k, x, DEFAULT_REL_TOL, Some(terms.max(1)));
    Ok(s.sum * (s.lead + x).exp())
}

/// Scaled large-argument bracket
/// `((1 - (4k^2-1)/(8x)) / sqrt(2 pi x), 1 / sqrt(2 pi x))` for
/// `e^(-x) I_k(x)`.
///
/// Defined for `k >= 1` and `x > (4k^2 - 1)/8`, where the lower end is
/// positive.
pub fn bessel_bounds(k: u32, x: f64) -> Result<(f64, f64), BesselError> {
    if k == 0 {
        return Err(BesselError::BoundOrder(k));
    }
    let shift = 4.0 * (k as f64).powi(2) - 1.0;
    let threshold = shift / 8.0;
    if x.is_nan() || x <= threshold || !x.is_finite() {
        return Err(BesselError::BelowBoundThreshold {
            order: k,
            argument: x,
            threshold,
        });
    }
    let upper = 1.0 / (std::f64::consts::TAU * x).sqrt();
    Ok((upper * (1.0 - shift / (8.0 * x)), upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_i(0, 0.0, DEFAULT_REL_TOL).unwrap(), 1.0);
        for k in 1..6 {
            assert_eq!(bessel_i(k, 0.0, DEFAULT_REL_TOL).unwrap(), 0.0);
        }
    }

    #[test]
    fn ln_factorial_matches_products() {
        let mut p = 1.0_f64;
        for n in 1..=60u64 {
            p *= n as f64;
            assert_relative_eq!(ln_factorial(n), p.ln(), max_relative = 1e-14);
        }
    }

    #[test]
    fn known_values() {
        // Reference values from standard tables.
        let cases = [
            (0, 1.0, 1.266_065_877_752_008_4),
            (1, 1.0, 0.565_159_103_992_485),
            (2, 5.0, 17.505_614_966_624_236),
            (5, 10.0, 777.188_286_403_259_9),
        ];
        for (k, x, want) in cases {
            assert_relative_eq!(bessel_i(k, x, 1e-14).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn scaled_matches_unscaled_across_paths() {
        for &k in &[0u32, 1, 2, 7, 20] {
            for &x in &[0.5, 10.0, 29.0, 31.5, 60.0, 200.0, 650.0] {
                let e = bessel_i_eval(k, x, DEFAULT_REL_TOL).unwrap();
                assert!(e.value.is_finite());
                assert_relative_eq!(e.scaled_value, e.value * (-x).exp(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            bessel_i(1, 800.0, DEFAULT_REL_TOL),
            Err(BesselError::Overflow { .. })
        ));
        assert!(bessel_i_scaled(1, 800.0, DEFAULT_REL_TOL)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            bessel_i(1, 1.0, 0.0),
            Err(BesselError::InvalidTolerance(_))
        ));
        assert!(matches!(
            bessel_i(1, 1.0, 0.1),
            Err(BesselError::InvalidTolerance(_))
        ));
        assert!(matches!(
            bessel_i(1, -1.0, 1e-12),
            Err(BesselError::InvalidArgument(_))
        ));
        assert!(matches!(
            bessel_i(1, f64::NAN, 1e-12),
            Err(BesselError::InvalidArgument(_))
        ));
        assert!(matches!(
            bessel_i(MAX_ORDER + 1, 1.0, 1e-12),
            Err(BesselError::OrderTooLarge(_))
        ));
    }

    #[test]
    fn hankel_agrees_with_peak_series_at_switch() {
        for &k in &[0u32, 1, 3, 9] {
            let x = 1.2e5;
            let series = peak_series(k, x, 1e-14).scaled();
            let asym = hankel(k, x, 1e-14).unwrap().scaled();
            assert_relative_eq!(series, asym, max_relative = 1e-12);
        }
    }

    #[test]
    fn large_order_small_argument_underflows_gracefully() {
        let v = bessel_i_scaled(MAX_ORDER, 1.0, DEFAULT_REL_TOL).unwrap();
        assert_eq!(v, 0.0);
        let ln = ln_bessel_i_scaled(MAX_ORDER, 1.0, DEFAULT_REL_TOL).unwrap();
        assert!(ln.is_finite() && ln < -1e4);
    }

    #[test]
    fn bounds_threshold() {
        assert!(matches!(
            bessel_bounds(1, 3.0 / 8.0),
            Err(BesselError::BelowBoundThreshold { .. })
        ));
        assert!(matches!(
            bessel_bounds(0, 10.0),
            Err(BesselError::BoundOrder(0))
        ));
        let (lo, hi) = bessel_bounds(1, 3.0 / 8.0 + 1e-9).unwrap();
        assert!(lo > 0.0 && lo < hi);
    }

    #[test]
    fn bounds_bracket_orders_two_and_up() {
        for k in 2..=10u32 {
            for &x in &[50.0, 100.0, 1e3, 1e4] {
                if x <= (4.0 * (k * k) as f64 - 1.0) / 8.0 + 1.0 {
                    continue;
                }
                let (lo, hi) = bessel_bounds(k, x).unwrap();
                let v = bessel_i_scaled(k, x, DEFAULT_REL_TOL).unwrap();
                assert!(lo < v && v < hi, "k={k} x={x}: {lo} {v} {hi}");
            }
        }
    }

    #[test]
    fn order_one_sits_below_the_lower_bound() {
        // e^-x I_1(x) sqrt(2 pi x) = 1 - 3/(8x) - 15/(128x^2) - ..., so the
        // two-term lower end is exceeded by roughly 15/(128 x^2).
        for &x in &[10.0, 100.0, 700.0, 1e4] {
            let (lo, hi) = bessel_bounds(1, x).unwrap();
            let v = bessel_i_scaled(1, x, DEFAULT_REL_TOL).unwrap();
            assert!(v < hi);
            assert!(v < lo);
            let gap = (lo - v) / hi;
            assert_relative_eq!(gap, 15.0 / (128.0 * x * x), max_relative = 0.2);
        }
    }
}
