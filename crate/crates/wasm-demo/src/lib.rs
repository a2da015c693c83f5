//! Browser bindings for a handful of interactive plots. Every exported
//! function returns a JSON string; the `*_points` functions are the same
//! computations without the JS glue.

use serde::Serialize;
use tensor_qpt::engine::{complexity_many_with, EngineLimits, ProductProblem};
use tensor_qpt::spectra::{korobov_spectrum, normalize, sqexp_spectrum, CoordinateSpectrum, KorobovParams, SqExpParams};
use tensor_qpt::sweep::ParamGenerator;
use tensor_qpt::tractability::{korobov_condition_sum, sqexp_condition_sum, trend_slope};
use tensor_qpt::{Error, Result};
use wasm_bindgen::prelude::*;

/// Coarser than the library default to keep the page responsive.
pub const DEMO_TRUNC_TOL: f64 = 1e-9;
pub const DEMO_MAX_N: usize = 2_000_000;
pub const DEMO_MAX_WORK: u64 = 50_000_000;
pub const DEMO_MAX_D: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Korobov,
    SquaredExponential,
}

impl Family {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "korobov" => Ok(Family::Korobov),
            "squared_exponential" | "sqexp" => Ok(Family::SquaredExponential),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }

    /// `a` is `g` or `sigma`; `b` is the Korobov smoothness and ignored otherwise.
    fn spectrum(self, a: f64, b: f64) -> Result<CoordinateSpectrum> {
        match self {
            Family::Korobov => korobov_spectrum(KorobovParams::new(a, b)?, DEMO_TRUNC_TOL),
            Family::SquaredExponential => sqexp_spectrum(SqExpParams::new(a)?, DEMO_TRUNC_TOL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityPoint {
    pub eps: f64,
    pub n: Option<u64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionPoint {
    pub d: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCurve {
    pub points: Vec<ConditionPoint>,
    pub trend: f64,
}

/// Leading normalized eigenvalues of one coordinate.
pub fn spectrum_points(family: Family, a: f64, b: f64, count: usize) -> Result<Vec<SpectrumPoint>> {
    let spec = normalize(&family.spectrum(a, b)?);
    Ok(spec
        .values()
        .iter()
        .take(count)
        .enumerate()
        .map(|(i, &value)| SpectrumPoint { k: i + 1, value })
        .collect())
}

/// `n(eps)` for `d` identical coordinates. Points beyond the demo limits have `n = None`.
pub fn complexity_points(family: Family, a: f64, b: f64, d: usize, eps: &[f64]) -> Result<Vec<ComplexityPoint>> {
    if d == 0 || d > 64 {
        return Err(Error::InvalidParameter(format!("d must lie in 1..=64, got {d}")));
    }
    let problem = ProductProblem::new(vec![family.spectrum(a, b)?; d])?;
    let limits = EngineLimits {
        max_queue: 4 * DEMO_MAX_N,
        max_n: DEMO_MAX_N,
        max_work: DEMO_MAX_WORK,
    };
    complexity_many_with(&problem, eps, limits)
        .into_iter()
        .zip(eps)
        .map(|(r, &eps)| match r {
            Ok(c) => Ok(ComplexityPoint {
                eps,
                n: Some(c.n),
                certified: c.certified,
            }),
            Err(Error::CapacityExhausted(_)) => Ok(ComplexityPoint {
                eps,
                n: None,
                certified: false,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

fn doubling_grid(d_max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |d| d.checked_mul(2))
        .take_while(|&d| d <= d_max)
        .collect()
}

/// Closed-form condition sum against `d = 1, 2, 4, ...` with the
/// per-coordinate parameter `scale * j^exponent * ln(j + 1)^log_exponent`.
/// For Korobov that parameter is `g_j` with smoothness `r`; otherwise it is `sigma_j`.
pub fn condition_points(
    family: Family,
    scale: f64,
    exponent: f64,
    log_exponent: f64,
    r: f64,
    d_max: usize,
) -> Result<ConditionCurve> {
    if d_max == 0 || d_max > DEMO_MAX_D {
        return Err(Error::InvalidParameter(format!("d_max must lie in 1..={DEMO_MAX_D}")));
    }
    let grid = doubling_grid(d_max);
    let d_top = *grid.last().expect("d_max >= 1");
    let params = ParamGenerator::LogPower {
        scale,
        exponent,
        log_exponent,
    }
    .take(d_top)?;
    let values = match family {
        Family::Korobov => {
            let seq = params
                .into_iter()
                .map(|g| KorobovParams::new(g, r))
                .collect::<Result<Vec<_>>>()?;
            grid.iter()
                .map(|&d| korobov_condition_sum(&seq, d))
                .collect::<Result<Vec<_>>>()?
        }
        Family::SquaredExponential => {
            let seq = params.into_iter().map(SqExpParams::new).collect::<Result<Vec<_>>>()?;
            grid.iter()
                .map(|&d| sqexp_condition_sum(&seq, d))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(ConditionCurve {
        trend: trend_slope(&grid, &values),
        points: grid
            .into_iter()
            .zip(values)
            .map(|(d, value)| ConditionPoint { d, value })
            .collect(),
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsValue> {
    let value = value.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(family: &str, a: f64, b: f64, count: usize) -> std::result::Result<String, JsValue> {
    to_js(Family::parse(family).and_then(|f| spectrum_points(f, a, b, count)))
}

#[wasm_bindgen]
pub fn complexity_curve(family: &str, a: f64, b: f64, d: usize, eps: Vec<f64>) -> std::result::Result<String, JsValue> {
    to_js(Family::parse(family).and_then(|f| complexity_points(f, a, b, d, &eps)))
}

#[wasm_bindgen]
pub fn condition_trend(
    family: &str,
    scale: f64,
    exponent: f64,
    log_exponent: f64,
    r: f64,
    d_max: usize,
) -> std::result::Result<String, JsValue> {
    to_js(Family::parse(family).and_then(|f| condition_points(f, scale, exponent, log_exponent, r, d_max)))
}
