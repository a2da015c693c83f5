//! Quasi-polynomial tractability criteria.
//!
//! All criterion quantities depend only on the normalized eigenvalues
//! `x = lambda / trace` of each coordinate. Zero eigenvalues are skipped,
//! which realizes the convention `|ln 0| * 0 = 0`. Sums are evaluated over
//! the retained eigenvalues; every quantity also gets an upper bound on the
//! contribution of the truncated tail (`None` when no finite bound exists).
//!
//! Boundedness over all `d` cannot be observed on a finite grid, so reports
//! attach a trend slope and only ever say "consistent with QPT".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{KorobovParams, NormalizedSpectrum, SqExpParams};
use crate::summation::{compensated_sum, CompensatedSum};

/// `max(1, ln x)` for `x > 0`.
pub fn ln_plus(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("ln_plus needs x > 0, got {x}")));
    }
    Ok(x.ln().max(1.0))
}

fn ln_plus_d(d: usize) -> f64 {
    (d as f64).ln().max(1.0)
}

/// Exponent `1 - gamma / ln_+ d` used by the power-type sums.
pub fn power_exponent(d: usize, gamma: f64) -> f64 {
    1.0 - gamma / ln_plus_d(d)
}

/// Threshold `exp(-tau ln_+ d)` separating the S and R parts.
pub fn small_eigenvalue_threshold(d: usize, tau: f64) -> f64 {
    (-tau * ln_plus_d(d)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionParams {
    pub gamma: f64,
    pub tau: f64,
}

impl CriterionParams {
    pub fn new(gamma: f64, tau: f64) -> Result<Self> {
        let p = Self { gamma, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    /// `gamma = 1/2` and `tau = max(1, 1 / (1 - 1/(2 r0)))`, so that
    /// `tau (1 - 1/(2 r0)) >= 1`.
    pub fn for_korobov(r0: f64) -> Result<Self> {
        if !(r0 > 0.5) {
            return Err(Error::InvalidParameter(format!("r0 must exceed 1/2, got {r0}")));
        }
        Self::new(0.5, (1.0 / (1.0 - 0.5 / r0)).max(1.0))
    }
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self { gamma: 0.5, tau: 1.0 }
    }
}

fn positive(values: &[f64]) -> impl DoubleEndedIterator<Item = f64> + '_ {
    values.iter().copied().filter(|&x| x > 0.0)
}

fn take_d(spectra: &[NormalizedSpectrum], d: usize) -> Result<&[NormalizedSpectrum]> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    spectra.get(..d).ok_or_else(|| {
        Error::InvalidParameter(format!("need {d} coordinate spectra, got {}", spectra.len()))
    })
}

/// A value together with a bound on what truncation left out.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bounded {
    value: f64,
    residual: Option<f64>,
}

fn sum_bounded(items: impl Iterator<Item = Bounded>) -> Bounded {
    let mut value = CompensatedSum::new();
    let mut residual = Some(CompensatedSum::new());
    for b in items {
        value.add(b.value);
        residual = match (residual, b.residual) {
            (Some(mut acc), Some(r)) => {
                acc.add(r);
                Some(acc)
            }
            _ => None,
        };
    }
    Bounded {
        value: value.value(),
        residual: residual.map(|r| r.value()),
    }
}

/// `sum_k x_k^a` over one coordinate.
pub fn qpt_factor(spec: &NormalizedSpectrum, d: usize, gamma: f64) -> f64 {
    let a = power_exponent(d, gamma);
    compensated_sum(positive(spec.values()).rev().map(|x| x.powf(a)))
}

/// `sum_k |ln x_k| x_k` over one coordinate.
pub fn entropy_term(spec: &NormalizedSpectrum) -> f64 {
    compensated_sum(positive(spec.values()).rev().map(|x| x.ln().abs() * x))
}

/// `sum_{k>=2} (1 + |ln x_k|) x_k` over one coordinate.
pub fn ln_condition_term(spec: &NormalizedSpectrum) -> f64 {
    compensated_sum(positive(&spec.values()[1..]).rev().map(|x| (1.0 + x.ln().abs()) * x))
}

/// `sum_{k>=2} x_k^a 1(x_k < exp(-tau ln_+ d))` over one coordinate.
pub fn exp_condition_term(spec: &NormalizedSpectrum, d: usize, params: CriterionParams) -> f64 {
    let a = power_exponent(d, params.gamma);
    let threshold = small_eigenvalue_threshold(d, params.tau);
    compensated_sum(
        positive(&spec.values()[1..])
            .rev()
            .filter(|&x| x < threshold)
            .map(|x| x.powf(a)),
    )
}

/// Per-coordinate `(S, R)`: `S = sum_k (x^a - x) 1(x >= t)`, `R = sum_k x^a 1(x < t)`.
pub fn s_r_terms(spec: &NormalizedSpectrum, d: usize, params: CriterionParams) -> (f64, f64) {
    let a = power_exponent(d, params.gamma);
    let threshold = small_eigenvalue_threshold(d, params.tau);
    let mut s = CompensatedSum::new();
    let mut r = CompensatedSum::new();
    for x in positive(spec.values()).rev() {
        if x >= threshold {
            s.add(x.powf(a) - x);
        } else {
            r.add(x.powf(a));
        }
    }
    (s.value(), r.value())
}

fn power_residual(spec: &NormalizedSpectrum, d: usize, gamma: f64) -> Option<f64> {
    spec.tail_power_sum(power_exponent(d, gamma))
}

fn ln_residual(spec: &NormalizedSpectrum) -> Option<f64> {
    spec.tail_entropy_sum().map(|e| e + spec.tail_bound())
}

fn old_qpt_bounded(spectra: &[NormalizedSpectrum], d: usize, gamma: f64) -> Bounded {
    let mut log_value = CompensatedSum::new();
    let mut log_ratio = Some(CompensatedSum::new());
    for spec in spectra {
        let s = qpt_factor(spec, d, gamma);
        log_value.add(s.ln());
        log_ratio = match (log_ratio, power_residual(spec, d, gamma)) {
            (Some(mut acc), Some(delta)) => {
                acc.add((delta / s).ln_1p());
                Some(acc)
            }
            _ => None,
        };
    }
    let value = log_value.value().exp();
    Bounded {
        value,
        residual: log_ratio.map(|l| value * l.value().exp_m1()),
    }
}

/// Product `prod_j sum_k x_{j,k}^{1 - gamma / ln_+ d}`, formed in log space.
pub fn old_qpt_product(spectra: &[NormalizedSpectrum], d: usize, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(old_qpt_bounded(take_d(spectra, d)?, d, gamma).value)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

fn necessary_bounded(spectra: &[NormalizedSpectrum], d: usize) -> Bounded {
    let lp = ln_plus_d(d);
    let b = sum_bounded(spectra.iter().map(|s| Bounded {
        value: entropy_term(s),
        residual: s.tail_entropy_sum(),
    }));
    Bounded {
        value: b.value / lp,
        residual: b.residual.map(|r| r / lp),
    }
}

/// `(1 / ln_+ d) sum_{j<=d} sum_k |ln x_{j,k}| x_{j,k}`.
pub fn necessary_sum(spectra: &[NormalizedSpectrum], d: usize) -> Result<f64> {
    Ok(necessary_bounded(take_d(spectra, d)?, d).value)
}

fn ln_condition_bounded(spectra: &[NormalizedSpectrum], d: usize) -> Bounded {
    let lp = ln_plus_d(d);
    let b = sum_bounded(spectra.iter().map(|s| Bounded {
        value: ln_condition_term(s),
        residual: ln_residual(s),
    }));
    Bounded {
        value: b.value / lp,
        residual: b.residual.map(|r| r / lp),
    }
}

/// `(1 / ln_+ d) sum_{j<=d} sum_{k>=2} (1 + |ln x_{j,k}|) x_{j,k}`.
pub fn ln_condition_sum(spectra: &[NormalizedSpectrum], d: usize) -> Result<f64> {
    Ok(ln_condition_bounded(take_d(spectra, d)?, d).value)
}

fn exp_condition_bounded(spectra: &[NormalizedSpectrum], d: usize, params: CriterionParams) -> Bounded {
    sum_bounded(spectra.iter().map(|s| Bounded {
        value: exp_condition_term(s, d, params),
        residual: power_residual(s, d, params.gamma),
    }))
}

/// `sum_{j<=d} sum_{k>=2} x^{1 - gamma/ln_+ d} 1(x < exp(-tau ln_+ d))`.
pub fn exp_condition_sum(spectra: &[NormalizedSpectrum], d: usize, params: CriterionParams) -> Result<f64> {
    params.validate()?;
    Ok(exp_condition_bounded(take_d(spectra, d)?, d, params).value)
}

fn s_r_bounded(spectra: &[NormalizedSpectrum], d: usize, params: CriterionParams) -> (Bounded, Bounded) {
    let terms: Vec<(f64, f64, Option<f64>)> = spectra
        .iter()
        .map(|s| {
            let (a, b) = s_r_terms(s, d, params);
            (a, b, power_residual(s, d, params.gamma))
        })
        .collect();
    let s = sum_bounded(terms.iter().map(|t| Bounded {
        value: t.0,
        residual: t.2,
    }));
    let r = sum_bounded(terms.iter().map(|t| Bounded {
        value: t.1,
        residual: t.2,
    }));
    (s, r)
}

/// `(sum_j S_j, sum_j R_j)`; the product from [`old_qpt_product`] never exceeds `exp(S + R)`.
pub fn s_r_decomposition(spectra: &[NormalizedSpectrum], d: usize, params: CriterionParams) -> Result<(f64, f64)> {
    params.validate()?;
    let (s, r) = s_r_bounded(take_d(spectra, d)?, d, params);
    Ok((s.value, r.value))
}

fn check_len(len: usize, d: usize) -> Result<()> {
    if d == 0 || d > len {
        return Err(Error::InvalidParameter(format!(
            "d = {d} must lie in 1..={len}"
        )));
    }
    Ok(())
}

/// Per-coordinate Korobov term `(1 + |ln g|) g`.
pub fn korobov_condition_term(params: KorobovParams) -> f64 {
    (1.0 + params.g.ln().abs()) * params.g
}

/// `(1 / ln_+ d) sum_{j<=d} (1 + |ln g_j|) g_j`.
pub fn korobov_condition_sum(params_seq: &[KorobovParams], d: usize) -> Result<f64> {
    check_len(params_seq.len(), d)?;
    Ok(compensated_sum(params_seq[..d].iter().map(|p| korobov_condition_term(*p))) / ln_plus_d(d))
}

/// Per-coordinate squared-exponential term `(1 + ln(1 + sigma^2)) / sigma^2`.
pub fn sqexp_condition_term(params: SqExpParams) -> f64 {
    let s2 = params.sigma * params.sigma;
    (1.0 + s2.ln_1p()) / s2
}

/// `(1 / ln_+ d) sum_{j<=d} (1 + ln(1 + sigma_j^2)) / sigma_j^2`.
pub fn sqexp_condition_sum(sigma_seq: &[SqExpParams], d: usize) -> Result<f64> {
    check_len(sigma_seq.len(), d)?;
    Ok(compensated_sum(sigma_seq[..d].iter().map(|p| sqexp_condition_term(*p))) / ln_plus_d(d))
}

/// Closed form of `sum_{k>=2} (1 + |ln x_k|) x_k` for the geometric
/// squared-exponential spectrum, with `w = sigma^2 I_sigma`:
/// `(1 + ln(1 + 1/w)) / (1 + w) + ln(1 + w) / w`.
pub fn sqexp_l_closed_form(params: SqExpParams) -> f64 {
    let w = params.scaled_width();
    (1.0 + (1.0 / w).ln_1p()) / (1.0 + w) + w.ln_1p() / w
}

/// Least-squares slope of `values` against `ln d` over the upper half of the grid.
pub fn trend_slope(d_grid: &[usize], values: &[f64]) -> f64 {
    let n = d_grid.len().min(values.len());
    if n < 2 {
        return 0.0;
    }
    let start = n - (n / 2).max(2);
    let xs: Vec<f64> = d_grid[start..n].iter().map(|&d| (d as f64).ln()).collect();
    let ys = &values[start..n];
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// Relative trend above which a series counts as growing.
pub const GROWTH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithQpt,
    InconsistentWithQpt,
}

/// One criterion quantity evaluated along a `d` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantitySeries {
    pub name: String,
    pub values: Vec<f64>,
    /// Bound on the truncated-tail contribution; `None` if unbounded or unknown.
    pub residuals: Vec<Option<f64>>,
    pub trend: f64,
}

impl QuantitySeries {
    pub fn new(name: impl Into<String>, d_grid: &[usize], values: Vec<f64>, residuals: Vec<Option<f64>>) -> Self {
        let trend = trend_slope(d_grid, &values);
        Self {
            name: name.into(),
            values,
            residuals,
            trend,
        }
    }

    /// Exact series (no truncation involved).
    pub fn exact(name: impl Into<String>, d_grid: &[usize], values: Vec<f64>) -> Self {
        let residuals = vec![Some(0.0); values.len()];
        Self::new(name, d_grid, values, residuals)
    }

    /// Trend divided by the mean value over the same upper half of the grid.
    pub fn relative_trend(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let tail = &self.values[n - (n / 2).max(2)..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        if mean == 0.0 {
            if self.trend == 0.0 {
                0.0
            } else {
                f64::INFINITY * self.trend.signum()
            }
        } else {
            self.trend / mean.abs()
        }
    }

    /// Heuristic: not growing faster than [`GROWTH_TOLERANCE`] relative to its size.
    pub fn looks_bounded(&self) -> bool {
        self.relative_trend() <= GROWTH_TOLERANCE
    }
}

pub const OLD_QPT_PRODUCT: &str = "old_qpt_product";
pub const NECESSARY_SUM: &str = "necessary_sum";
pub const LN_CONDITION_SUM: &str = "ln_condition_sum";
pub const EXP_CONDITION_SUM: &str = "exp_condition_sum";
pub const S_SUM: &str = "s_sum";
pub const R_SUM: &str = "r_sum";

/// All generic criterion quantities along a `d` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub d_grid: Vec<usize>,
    pub params: CriterionParams,
    pub old_qpt_products: QuantitySeries,
    pub necessary_sums: QuantitySeries,
    pub ln_condition_sums: QuantitySeries,
    pub exp_condition_sums: QuantitySeries,
    pub s_sums: QuantitySeries,
    pub r_sums: QuantitySeries,
}

impl CriterionReport {
    pub fn quantities(&self) -> [&QuantitySeries; 6] {
        [
            &self.old_qpt_products,
            &self.necessary_sums,
            &self.ln_condition_sums,
            &self.exp_condition_sums,
            &self.s_sums,
            &self.r_sums,
        ]
    }

    /// Finite-grid reading of the simplified two-condition criterion.
    pub fn verdict(&self) -> Verdict {
        if self.ln_condition_sums.looks_bounded() && self.exp_condition_sums.looks_bounded() {
            Verdict::ConsistentWithQpt
        } else {
            Verdict::InconsistentWithQpt
        }
    }
}

fn validate_grid(d_grid: &[usize]) -> Result<()> {
    if d_grid.is_empty() {
        return Err(Error::InvalidParameter("d grid is empty".into()));
    }
    if d_grid[0] == 0 || d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("d grid must be strictly increasing positive integers".into()));
    }
    Ok(())
}

/// Evaluates every generic criterion quantity for each `d` in the grid.
/// `spectra` must hold at least `max(d_grid)` coordinates.
pub fn criterion_report(
    spectra: &[NormalizedSpectrum],
    d_grid: &[usize],
    params: CriterionParams,
) -> Result<CriterionReport> {
    params.validate()?;
    validate_grid(d_grid)?;
    let d_max = *d_grid.last().expect("non-empty grid");
    take_d(spectra, d_max)?;

    let mut rows: [(Vec<f64>, Vec<Option<f64>>); 6] = Default::default();
    for &d in d_grid {
        let s = &spectra[..d];
        let (s_sum, r_sum) = s_r_bounded(s, d, params);
        let evaluated = [
            old_qpt_bounded(s, d, params.gamma),
            necessary_bounded(s, d),
            ln_condition_bounded(s, d),
            exp_condition_bounded(s, d, params),
            s_sum,
            r_sum,
        ];
        for (row, b) in rows.iter_mut().zip(evaluated) {
            row.0.push(b.value);
            row.1.push(b.residual);
        }
    }
    let [old, nec, ln, exp, s, r] = rows;
    let series = |name: &str, (v, res): (Vec<f64>, Vec<Option<f64>>)| QuantitySeries::new(name, d_grid, v, res);
    Ok(CriterionReport {
        d_grid: d_grid.to_vec(),
        params,
        old_qpt_products: series(OLD_QPT_PRODUCT, old),
        necessary_sums: series(NECESSARY_SUM, nec),
        ln_condition_sums: series(LN_CONDITION_SUM, ln),
        exp_condition_sums: series(EXP_CONDITION_SUM, exp),
        s_sums: series(S_SUM, s),
        r_sums: series(R_SUM, r),
    })
}

/// Least-squares fit of `ln n = ln C + s (1 + ln 1/eps)(1 + ln d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QptFit {
    pub s_hat: f64,
    pub log_c_hat: f64,
    /// `max ln n - (log_c_hat + s_hat * regressor)` over the samples.
    pub max_residual: f64,
}

/// One measured complexity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexitySample {
    pub d: usize,
    pub eps: f64,
    pub n: u64,
}

pub fn qpt_regressor(d: usize, eps: f64) -> f64 {
    (1.0 - eps.ln()) * (1.0 + (d as f64).ln())
}

pub fn qpt_fit(samples: &[ComplexitySample]) -> Result<QptFit> {
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 samples, got {}", samples.len())));
    }
    for s in samples {
        if s.d == 0 || s.n == 0 || !(s.eps > 0.0 && s.eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid sample d={} eps={} n={}",
                s.d, s.eps, s.n
            )));
        }
    }
    let distinct = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if distinct(samples.iter().map(|s| s.d as f64).collect()) < 2 {
        return Err(Error::DegenerateFit("samples need at least two distinct d".into()));
    }
    if distinct(samples.iter().map(|s| s.eps).collect()) < 2 {
        return Err(Error::DegenerateFit("samples need at least two distinct eps".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| qpt_regressor(s.d, s.eps)).collect();
    let ys: Vec<f64> = samples.iter().map(|s| (s.n as f64).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 1e-12 * mx * mx) {
        return Err(Error::DegenerateFit("all samples share one regressor value".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let (s_hat, log_c_hat) = if sxy / sxx >= 0.0 {
        let s = sxy / sxx;
        (s, my - s * mx)
    } else {
        (0.0, my)
    };
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (log_c_hat + s_hat * x))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(QptFit {
        s_hat,
        log_c_hat,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{explicit_spectrum, normalize, sqexp_spectrum};

    fn norm(values: &[f64]) -> NormalizedSpectrum {
        normalize(&explicit_spectrum(values, None).unwrap())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn ln_plus_values() {
        assert_eq!(ln_plus(1.0).unwrap(), 1.0);
        assert_eq!(ln_plus(std::f64::consts::E).unwrap(), 1.0);
        assert!(close(ln_plus(std::f64::consts::E.powi(2)).unwrap(), 2.0));
        assert!(ln_plus(0.0).is_err());
        assert!(ln_plus(-1.0).is_err());
    }

    #[test]
    fn old_product_examples() {
        let one = vec![norm(&[1.0]); 5];
        for g in [0.1, 0.5, 0.9] {
            assert_eq!(old_qpt_product(&one, 5, g).unwrap(), 1.0);
        }
        let half = vec![norm(&[0.5, 0.5]); 2];
        assert!(close(old_qpt_product(&half, 1, 0.5).unwrap(), 2f64.sqrt()));
        assert!(close(old_qpt_product(&half, 2, 0.5).unwrap(), 2.0));
        assert!(old_qpt_product(&half, 3, 0.5).is_err());
        assert!(old_qpt_product(&half, 1, 1.0).is_err());
    }

    #[test]
    fn necessary_sum_examples() {
        let one = vec![norm(&[1.0]); 3];
        assert_eq!(necessary_sum(&one, 3).unwrap(), 0.0);
        let half = vec![norm(&[0.5, 0.5]); 3];
        assert!(close(necessary_sum(&half, 1).unwrap(), 2f64.ln()));
        assert!(close(necessary_sum(&half, 3).unwrap(), 3.0 * 2f64.ln() / 3f64.ln()));
    }

    #[test]
    fn ln_condition_examples() {
        let one = vec![norm(&[1.0]); 3];
        assert_eq!(ln_condition_sum(&one, 2).unwrap(), 0.0);
        let half = vec![norm(&[0.5, 0.5])];
        assert!(close(ln_condition_sum(&half, 1).unwrap(), (1.0 + 2f64.ln()) * 0.5));
    }

    #[test]
    fn exp_condition_examples() {
        let p = CriterionParams::new(0.5, 2.0).unwrap();
        let half = vec![norm(&[0.5, 0.5])];
        assert_eq!(exp_condition_sum(&half, 1, p).unwrap(), 0.0);
        let skewed = vec![norm(&[0.9, 0.05, 0.05])];
        let v = exp_condition_sum(&skewed, 1, p).unwrap();
        assert!(close(v, 2.0 * 0.05f64.sqrt()));
        assert!((v - 0.4472).abs() < 1e-4);
        // large tau empties the indicator
        let big = CriterionParams::new(0.5, 50.0).unwrap();
        assert_eq!(exp_condition_sum(&skewed, 1, big).unwrap(), 0.0);
    }

    #[test]
    fn s_r_examples() {
        let p = CriterionParams::new(0.5, 2.0).unwrap();
        let one = vec![norm(&[1.0]); 4];
        assert_eq!(s_r_decomposition(&one, 4, p).unwrap(), (0.0, 0.0));
        let half = vec![norm(&[0.5, 0.5])];
        let (s, r) = s_r_decomposition(&half, 1, p).unwrap();
        assert!(close(s, 2f64.sqrt() - 1.0));
        assert_eq!(r, 0.0);
    }

    #[test]
    fn threshold_boundary_goes_to_s_side() {
        // d = 1: threshold exp(-tau); put one value exactly on it
        let tau = 2.0;
        let t = small_eigenvalue_threshold(1, tau);
        let spec = NormalizedSpectrum::clone(&norm(&[1.0 - t, t]));
        let x = spec.values()[1];
        let p = CriterionParams::new(0.5, tau).unwrap();
        if x == t {
            let (s, r) = s_r_terms(&spec, 1, p);
            assert!(s > 0.0);
            assert_eq!(r, 0.0);
            assert_eq!(exp_condition_term(&spec, 1, p), 0.0);
        }
    }

    #[test]
    fn zero_eigenvalues_are_skipped() {
        let with_zero = vec![norm(&[0.5, 0.5, 0.0, 0.0])];
        let without = vec![norm(&[0.5, 0.5])];
        let p = CriterionParams::new(0.5, 1.0).unwrap();
        assert_eq!(necessary_sum(&with_zero, 1).unwrap(), necessary_sum(&without, 1).unwrap());
        assert_eq!(ln_condition_sum(&with_zero, 1).unwrap(), ln_condition_sum(&without, 1).unwrap());
        assert_eq!(
            old_qpt_product(&with_zero, 1, 0.5).unwrap(),
            old_qpt_product(&without, 1, 0.5).unwrap()
        );
        assert_eq!(exp_condition_sum(&with_zero, 1, p).unwrap(), 0.0);
    }

    #[test]
    fn korobov_condition_examples() {
        let ones: Vec<KorobovParams> = (0..100).map(|_| KorobovParams::new(1.0, 1.0).unwrap()).collect();
        assert!(close(korobov_condition_sum(&ones, 100).unwrap(), 100.0 / 100f64.ln()));
        let decaying: Vec<KorobovParams> = (1..=3)
            .map(|j| KorobovParams::new(1.0 / (j * j) as f64, 1.0).unwrap())
            .collect();
        let expected = (1.0 + (1.0 + 4f64.ln()) / 4.0 + (1.0 + 9f64.ln()) / 9.0) / 3f64.ln();
        let v = korobov_condition_sum(&decaying, 3).unwrap();
        assert!(close(v, expected));
        assert!((v - 1.777).abs() < 1e-3);
        assert!(korobov_condition_sum(&decaying, 4).is_err());
        assert!(korobov_condition_sum(&decaying, 0).is_err());
    }

    #[test]
    fn sqexp_condition_constant_sigma() {
        let sigma = 1.7;
        let seq = vec![SqExpParams::new(sigma).unwrap(); 50];
        let s2: f64 = sigma * sigma;
        let expected = 50.0 * (1.0 + s2.ln_1p()) / (s2 * 50f64.ln());
        assert!(close(sqexp_condition_sum(&seq, 50).unwrap(), expected));
    }

    #[test]
    fn sqexp_closed_form_matches_series() {
        for sigma in [0.5, 1.0, 2.0, 5.0] {
            let p = SqExpParams::new(sigma).unwrap();
            let spec = normalize(&sqexp_spectrum(p, 1e-15).unwrap());
            let series = ln_condition_term(&spec);
            let closed = sqexp_l_closed_form(p);
            assert!((series - closed).abs() <= 1e-10 * closed, "sigma={sigma} {series} {closed}");
        }
        assert!(sqexp_l_closed_form(SqExpParams::new(1e4).unwrap()) < 1e-6);
    }

    #[test]
    fn sqexp_closed_form_matches_intermediate_omega_form() {
        // (1 - ln(1 - w)) w - ln(w) w / (1 - w)
        let p = SqExpParams::new(1.0).unwrap();
        let w = p.omega();
        let via_omega = (1.0 - (1.0 - w).ln()) * w - w.ln() * w / (1.0 - w);
        assert!((via_omega - sqexp_l_closed_form(p)).abs() < 1e-14);
    }

    #[test]
    fn trend_of_linear_in_log() {
        let grid = [1, 10, 100, 1000, 10000];
        let values: Vec<f64> = grid.iter().map(|&d| 3.0 * (d as f64).ln() + 1.0).collect();
        assert!((trend_slope(&grid, &values) - 3.0).abs() < 1e-12);
        assert_eq!(trend_slope(&[5], &[1.0]), 0.0);
    }

    #[test]
    fn report_shapes_and_verdict() {
        let spectra = vec![norm(&[0.8, 0.15, 0.05]); 64];
        let grid = [1, 2, 4, 8, 16, 32, 64];
        let report = criterion_report(&spectra, &grid, CriterionParams::default()).unwrap();
        for q in report.quantities() {
            assert_eq!(q.values.len(), grid.len());
            assert!(q.values.iter().all(|v| v.is_finite() && *v >= 0.0), "{}", q.name);
            assert!(q.residuals.iter().all(|r| *r == Some(0.0)));
        }
        assert!(report.old_qpt_products.values.iter().all(|&v| v >= 1.0));
        // identical coordinates: d / ln d growth
        assert_eq!(report.verdict(), Verdict::InconsistentWithQpt);
        assert!(criterion_report(&spectra, &[2, 1], CriterionParams::default()).is_err());
        assert!(criterion_report(&spectra, &[65], CriterionParams::default()).is_err());
    }

    #[test]
    fn fit_recovers_exact_model() {
        let mut samples = Vec::new();
        for d in [1, 2, 4, 8] {
            for eps in [0.5, 0.2, 0.1] {
                let n = (6.0 + 2.0 * qpt_regressor(d, eps)).exp().round() as u64;
                samples.push(ComplexitySample { d, eps, n });
            }
        }
        // rounding n to an integer moves ln n by at most 0.5 / n < 2e-5
        let fit = qpt_fit(&samples).unwrap();
        assert!((fit.s_hat - 2.0).abs() < 1e-4, "{fit:?}");
        assert!((fit.log_c_hat - 6.0).abs() < 1e-3);
        assert!(fit.max_residual.abs() < 1e-4);
    }

    #[test]
    fn fit_rejects_degenerate_designs() {
        let d1: Vec<_> = [0.5, 0.2, 0.1, 0.05]
            .iter()
            .map(|&eps| ComplexitySample { d: 1, eps, n: 3 })
            .collect();
        assert!(matches!(qpt_fit(&d1), Err(Error::DegenerateFit(_))));
        let e1: Vec<_> = [1, 2, 3, 4]
            .iter()
            .map(|&d| ComplexitySample { d, eps: 0.5, n: 3 })
            .collect();
        assert!(matches!(qpt_fit(&e1), Err(Error::DegenerateFit(_))));
        assert!(qpt_fit(&e1[..3]).is_err());
    }

    #[test]
    fn korobov_default_tau() {
        let p = CriterionParams::for_korobov(1.0).unwrap();
        assert_eq!(p.tau, 2.0);
        assert!(p.tau * (1.0 - 0.5) >= 1.0);
        assert_eq!(CriterionParams::for_korobov(100.0).unwrap().tau, 1.0 / (1.0 - 0.005));
        assert!(CriterionParams::for_korobov(0.5).is_err());
    }
}
