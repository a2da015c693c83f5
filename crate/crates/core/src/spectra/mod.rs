//! Per-coordinate covariance spectra.
//!
//! Each coordinate of a tensor-product random element is described by the
//! non-increasing eigenvalue sequence of its covariance operator. Infinite
//! sequences are truncated to a finite prefix; the dropped mass is carried as
//! a rigorous upper bound together with a model of the dropped values, so that
//! downstream sums can account for what was cut off.

mod zeta;

pub use zeta::{power_tail_sum, power_tail_sum_with_error, zeta};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::compensated_sum;

/// Default relative truncation tolerance.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-12;

/// Default cap on the number of materialized eigenvalues per coordinate.
pub const DEFAULT_MAX_LEN: usize = 1 << 20;

/// Rounding allowance added to analytic tail bounds, relative to the trace.
const ROUNDING_ALLOWANCE: f64 = 8.0 * f64::EPSILON;

/// Tolerance used when validating `sum <= trace <= sum + tail`.
const VALIDATION_SLACK: f64 = 1e-12;

/// Shape of the eigenvalues dropped by truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailModel {
    /// Nothing was dropped.
    Empty,
    /// `multiplicity` copies of `coeff * k^(-exponent)` for every `k > last_index`.
    PowerLaw {
        coeff: f64,
        exponent: f64,
        last_index: u64,
        multiplicity: u32,
    },
    /// `first * ratio^i` for `i >= 0`.
    Geometric { first: f64, ratio: f64 },
    /// Only the dropped mass is known.
    Opaque,
}

impl TailModel {
    fn scaled(self, factor: f64) -> Self {
        match self {
            TailModel::PowerLaw {
                coeff,
                exponent,
                last_index,
                multiplicity,
            } => TailModel::PowerLaw {
                coeff: coeff * factor,
                exponent,
                last_index,
                multiplicity,
            },
            TailModel::Geometric { first, ratio } => TailModel::Geometric {
                first: first * factor,
                ratio,
            },
            other => other,
        }
    }
}

/// Truncation controls for infinite spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Target bound on dropped mass relative to the trace.
    pub tol: f64,
    /// Hard cap on the number of retained eigenvalues.
    pub max_len: usize,
}

impl Truncation {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_len: DEFAULT_MAX_LEN,
        }
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_len < 3 {
            return Err(Error::InvalidParameter(format!(
                "max_len must be at least 3, got {}",
                self.max_len
            )));
        }
        Ok(())
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self::new(DEFAULT_TRUNC_TOL)
    }
}

/// One coordinate's truncated eigenvalue sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSpectrum {
    eigenvalues: Arc<[f64]>,
    trace: f64,
    tail_bound: f64,
    tail: TailModel,
    capped: bool,
    label: String,
}

impl CoordinateSpectrum {
    fn checked(
        eigenvalues: Vec<f64>,
        trace: f64,
        tail_bound: f64,
        tail: TailModel,
        capped: bool,
        label: String,
    ) -> Result<Self> {
        let spec = Self {
            eigenvalues: eigenvalues.into(),
            trace,
            tail_bound,
            tail,
            capped,
            label,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let first = *self
            .eigenvalues
            .first()
            .ok_or_else(|| Error::InvalidSpectrum("empty eigenvalue sequence".into()))?;
        if !(first > 0.0) || !first.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "leading eigenvalue must be positive and finite, got {first}"
            )));
        }
        if self.eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be non-increasing".into()));
        }
        if self.eigenvalues.iter().any(|&x| x < 0.0 || x.is_nan()) {
            return Err(Error::InvalidSpectrum("eigenvalues must be non-negative".into()));
        }
        let sum = self.retained_sum();
        let slack = VALIDATION_SLACK * self.trace;
        if !(self.trace.is_finite() && self.trace > 0.0) {
            return Err(Error::InvalidSpectrum(format!("trace must be positive, got {}", self.trace)));
        }
        if !(self.tail_bound >= 0.0) {
            return Err(Error::InvalidSpectrum("tail bound must be non-negative".into()));
        }
        if sum > self.trace + slack || sum + self.tail_bound < self.trace - slack {
            return Err(Error::InvalidSpectrum(format!(
                "retained sum {sum} and tail bound {} inconsistent with trace {}",
                self.tail_bound, self.trace
            )));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Exact (untruncated) trace.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Upper bound on the total of the dropped eigenvalues.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `tail_bound / trace`.
    pub fn relative_tail(&self) -> f64 {
        self.tail_bound / self.trace
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// True when the length cap stopped truncation before the tolerance was met.
    pub fn is_capped(&self) -> bool {
        self.capped
    }

    /// Upper bound on any single dropped eigenvalue.
    pub fn dropped_max(&self) -> f64 {
        let model = match self.tail {
            TailModel::Empty => 0.0,
            TailModel::PowerLaw {
                coeff,
                exponent,
                last_index,
                ..
            } => coeff * ((last_index + 1) as f64).powf(-exponent),
            TailModel::Geometric { first, .. } => first,
            TailModel::Opaque => *self.eigenvalues.last().expect("non-empty spectrum"),
        };
        model.min(self.tail_bound)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Compensated sum of the retained eigenvalues.
    pub fn retained_sum(&self) -> f64 {
        compensated_sum(self.eigenvalues.iter().rev().copied())
    }

    /// Returns a copy with every eigenvalue, the trace and the tail scaled by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {factor}")));
        }
        Self::checked(
            self.eigenvalues.iter().map(|x| x * factor).collect(),
            self.trace * factor,
            self.tail_bound * factor,
            self.tail.scaled(factor),
            self.capped,
            self.label.clone(),
        )
    }
}

/// Eigenvalues divided by the coordinate trace; they sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpectrum {
    values: Vec<f64>,
    tail_bound: f64,
    tail: TailModel,
}

impl NormalizedSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Upper bound on the sum of `x^a` over the dropped normalized values,
    /// for `0 < a <= 1`. `None` when no finite bound is available.
    pub fn tail_power_sum(&self, a: f64) -> Option<f64> {
        match self.tail {
            TailModel::Empty => Some(0.0),
            TailModel::Opaque => (self.tail_bound == 0.0).then_some(0.0),
            TailModel::Geometric { first, ratio } => {
                if first <= 0.0 {
                    return Some(0.0);
                }
                Some(first.powf(a) / (1.0 - ratio.powf(a)))
            }
            TailModel::PowerLaw {
                coeff,
                exponent,
                last_index,
                multiplicity,
            } => {
                let q = exponent * a;
                if q <= 1.0 {
                    return None;
                }
                // k^{-q} is convex, so each term is below its midpoint cell integral
                let start = last_index as f64 + 0.5;
                Some(multiplicity as f64 * coeff.powf(a) * start.powf(1.0 - q) / (q - 1.0))
            }
        }
    }

    /// Upper bound on the sum of `x |ln x|` over the dropped normalized values.
    pub fn tail_entropy_sum(&self) -> Option<f64> {
        match self.tail {
            TailModel::Empty => Some(0.0),
            TailModel::Opaque => (self.tail_bound == 0.0).then_some(0.0),
            TailModel::Geometric { first, ratio } => {
                if first <= 0.0 {
                    return Some(0.0);
                }
                let one_minus = 1.0 - ratio;
                Some(
                    first * (-first.ln()) / one_minus
                        + first * (-ratio.ln()) * ratio / (one_minus * one_minus),
                )
            }
            TailModel::PowerLaw {
                coeff,
                exponent,
                last_index,
                multiplicity,
            } => {
                let k = last_index as f64;
                // x |ln x| must be decreasing in k over the dropped range
                if coeff * k.powf(-exponent) > (-1.0f64).exp() {
                    return None;
                }
                let q = exponent - 1.0;
                let kq = k.powf(-q);
                let integral = coeff * (exponent * kq * (k.ln() / q + 1.0 / (q * q)) - coeff.ln() * kq / q);
                Some(multiplicity as f64 * integral)
            }
        }
    }
}

/// Weight and smoothness of a Korobov kernel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KorobovParams {
    pub g: f64,
    pub r: f64,
}

impl KorobovParams {
    pub fn new(g: f64, r: f64) -> Result<Self> {
        let p = Self { g, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Korobov weight g must lie in (0, 1], got {}",
                self.g
            )));
        }
        if !(self.r > 0.5) || !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Korobov smoothness r must exceed 1/2, got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// `1 + 2 g zeta(2r)`.
    pub fn trace(&self) -> Result<f64> {
        self.validate()?;
        Ok(1.0 + 2.0 * self.g * zeta(2.0 * self.r)?)
    }
}

/// Length-scale of a squared-exponential kernel coordinate under a standard
/// Gaussian input measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqExpParams {
    pub sigma: f64,
}

impl SqExpParams {
    pub fn new(sigma: f64) -> Result<Self> {
        let p = Self { sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "length-scale must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// `1/2 + 1/2 sqrt(1 + 4/sigma^2)`.
    pub fn i_factor(&self) -> f64 {
        0.5 + 0.5 * (1.0 + 4.0 / (self.sigma * self.sigma)).sqrt()
    }

    /// `sigma^2 * I_sigma`.
    pub fn scaled_width(&self) -> f64 {
        self.sigma * self.sigma * self.i_factor()
    }

    /// Geometric decay ratio `1 / (1 + sigma^2 I_sigma)`.
    pub fn omega(&self) -> f64 {
        1.0 / (1.0 + self.scaled_width())
    }
}

/// Korobov spectrum `1, g, g, g 2^{-2r}, g 2^{-2r}, ...` with the default length cap.
pub fn korobov_spectrum(params: KorobovParams, trunc_tol: f64) -> Result<CoordinateSpectrum> {
    korobov_spectrum_with(params, Truncation::new(trunc_tol))
}

pub fn korobov_spectrum_with(params: KorobovParams, trunc: Truncation) -> Result<CoordinateSpectrum> {
    params.validate()?;
    trunc.validate()?;
    let KorobovParams { g, r } = params;
    let p = 2.0 * r;
    let trace = 1.0 + 2.0 * g * zeta(p)?;
    let allowance = ROUNDING_ALLOWANCE * trace;
    // 2g sum_{k>K} k^{-p} <= 2g (K + 1/2)^{1-p} / (p - 1)
    let bound = |pairs: u64| 2.0 * g * (pairs as f64 + 0.5).powf(1.0 - p) / (p - 1.0) + allowance;
    let budget = trunc.tol * trace;
    let max_pairs = ((trunc.max_len - 1) / 2) as u64;

    let mut pairs = if budget > allowance {
        let x = ((budget - allowance) * (p - 1.0) / (2.0 * g)).powf(-1.0 / (p - 1.0)) - 0.5;
        if x.is_finite() {
            x.ceil().max(1.0).min(max_pairs as f64) as u64
        } else {
            max_pairs
        }
    } else {
        max_pairs
    };
    while pairs > 1 && bound(pairs - 1) <= budget {
        pairs -= 1;
    }
    while pairs < max_pairs && bound(pairs) > budget {
        pairs += 1;
    }
    let capped = bound(pairs) > budget;

    let mut eigenvalues = Vec::with_capacity(1 + 2 * pairs as usize);
    eigenvalues.push(1.0);
    for k in 1..=pairs {
        let v = g * (k as f64).powf(-p);
        eigenvalues.push(v);
        eigenvalues.push(v);
    }
    CoordinateSpectrum::checked(
        eigenvalues,
        trace,
        bound(pairs),
        TailModel::PowerLaw {
            coeff: g,
            exponent: p,
            last_index: pairs,
            multiplicity: 2,
        },
        capped,
        format!("korobov(g={g}, r={r})"),
    )
}

/// Squared-exponential spectrum `(1 - w) w^{k-1}` with the default length cap.
pub fn sqexp_spectrum(params: SqExpParams, trunc_tol: f64) -> Result<CoordinateSpectrum> {
    sqexp_spectrum_with(params, Truncation::new(trunc_tol))
}

pub fn sqexp_spectrum_with(params: SqExpParams, trunc: Truncation) -> Result<CoordinateSpectrum> {
    params.validate()?;
    trunc.validate()?;
    let omega = params.omega();
    let needed = (trunc.tol.ln() / omega.ln()).ceil().max(1.0);
    let mut len = if needed.is_finite() {
        (needed as usize).min(trunc.max_len)
    } else {
        trunc.max_len
    };
    while len > 1 && omega.powi(len as i32 - 1) <= trunc.tol {
        len -= 1;
    }
    while len < trunc.max_len && omega.powi(len as i32) > trunc.tol {
        len += 1;
    }
    let mut eigenvalues = Vec::with_capacity(len);
    let mut v = 1.0 - omega;
    for _ in 0..len {
        eigenvalues.push(v);
        v *= omega;
    }
    let tail = omega.powi(len as i32);
    let capped = tail > trunc.tol;
    CoordinateSpectrum::checked(
        eigenvalues,
        1.0,
        tail + ROUNDING_ALLOWANCE,
        TailModel::Geometric {
            first: (1.0 - omega) * tail,
            ratio: omega,
        },
        capped,
        format!("sqexp(sigma={})", params.sigma),
    )
}

/// Spectrum from an explicit list of eigenvalues. Values are sorted
/// non-increasing; the trace defaults to their sum.
pub fn explicit_spectrum(values: &[f64], trace: Option<f64>) -> Result<CoordinateSpectrum> {
    if values.is_empty() {
        return Err(Error::InvalidSpectrum("explicit spectrum needs at least one value".into()));
    }
    if let Some(bad) = values.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidSpectrum(format!(
            "eigenvalues must be finite and non-negative, got {bad}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0] == 0.0 {
        return Err(Error::InvalidSpectrum("all eigenvalues are zero".into()));
    }
    let sum = compensated_sum(sorted.iter().rev().copied());
    let (trace, tail_bound, tail) = match trace {
        None => (sum, 0.0, TailModel::Empty),
        Some(t) if !(t >= sum) || !t.is_finite() => {
            return Err(Error::InvalidSpectrum(format!(
                "trace {t} is below the sum of the given eigenvalues {sum}"
            )));
        }
        Some(t) if t == sum => (t, 0.0, TailModel::Empty),
        Some(t) => (t, t - sum, TailModel::Opaque),
    };
    CoordinateSpectrum::checked(sorted, trace, tail_bound, tail, false, "explicit".into())
}

/// Divides every eigenvalue and the tail by the trace.
pub fn normalize(spec: &CoordinateSpectrum) -> NormalizedSpectrum {
    let inv = 1.0 / spec.trace;
    NormalizedSpectrum {
        values: spec.eigenvalues.iter().map(|x| x / spec.trace).collect(),
        tail_bound: spec.tail_bound * inv,
        tail: spec.tail.scaled(inv),
    }
}
