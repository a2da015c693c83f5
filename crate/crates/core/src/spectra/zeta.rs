//! Riemann zeta and power-series tails by direct summation plus an
//! Euler-Maclaurin correction.

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Index from which the Euler-Maclaurin expansion takes over.
const SWITCH_INDEX: u64 = 64;

fn rising(p: f64, m: u32) -> f64 {
    (0..m).map(|i| p + i as f64).product()
}

/// Euler-Maclaurin estimate of `sum_{k >= n} k^{-p}` for `n >= 1`, together
/// with a bound on the remainder (first omitted term, valid for the
/// completely monotone `x^{-p}`).
fn euler_maclaurin_tail(p: f64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let f = n.powf(-p);
    let integral = n * f / (p - 1.0);
    let mut acc = CompensatedSum::with_initial(integral);
    acc.add(0.5 * f);
    acc.add(p * f / n / 12.0);
    acc.add(-rising(p, 3) * f / n.powi(3) / 720.0);
    acc.add(rising(p, 5) * f / n.powi(5) / 30240.0);
    let remainder = rising(p, 7) * f / n.powi(7) / 1_209_600.0;
    (acc.value(), remainder)
}

/// `sum_{k >= start} k^{-p}` for `p > 1`, `start >= 1`, and a bound on the
/// truncation error of the expansion.
pub fn power_tail_sum_with_error(p: f64, start: u64) -> Result<(f64, f64)> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "power series exponent must be finite and > 1, got {p}"
        )));
    }
    if start == 0 {
        return Err(Error::InvalidParameter("power series starts at k = 1".into()));
    }
    let switch = start.max(SWITCH_INDEX);
    let (tail, err) = euler_maclaurin_tail(p, switch);
    let mut acc = CompensatedSum::with_initial(tail);
    // smallest terms first
    for k in (start..switch).rev() {
        acc.add((k as f64).powf(-p));
    }
    Ok((acc.value(), err))
}

/// `sum_{k >= start} k^{-p}`.
pub fn power_tail_sum(p: f64, start: u64) -> Result<f64> {
    power_tail_sum_with_error(p, start).map(|(v, _)| v)
}

/// Riemann zeta function for real `p > 1`.
pub fn zeta(p: f64) -> Result<f64> {
    power_tail_sum(p, 1)
}
