use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FamilyConfig, Output, SweepConfig};
use crate::engine::{complexity_many_with, error_curve, EngineLimits, ProductProblem};
use crate::error::{Error, Result};
use crate::spectra::{
    explicit_spectrum, korobov_spectrum_with, normalize, sqexp_spectrum_with, CoordinateSpectrum, NormalizedSpectrum,
    Truncation,
};
use crate::tractability::{
    criterion_report, korobov_condition_sum, qpt_fit, sqexp_condition_sum, sqexp_l_closed_form, ComplexitySample,
    CriterionParams, QuantitySeries,
};

/// Longest error curve emitted per `d`.
pub const MAX_ERROR_CURVE_LEN: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub d: usize,
    pub eps: f64,
    /// `0` when the point failed; see `note`.
    pub n: u64,
    pub captured_mass: f64,
    pub target_mass: f64,
    pub certified: bool,
    pub truncation_slack: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub capacity_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveRow {
    pub d: usize,
    pub n: u64,
    /// `e(n) / e(0)`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub d: usize,
    pub quantity: String,
    pub value: f64,
    /// `None` when the truncated tail admits no finite bound.
    pub residual_bound: Option<f64>,
    pub trend: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub s_hat: f64,
    pub log_c_hat: f64,
    pub max_residual: f64,
}

/// Rows of one sweep, in grid order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub complexity: Vec<ComplexityRow>,
    pub error_curve: Vec<ErrorCurveRow>,
    pub criterion: Vec<CriterionRow>,
    pub fit: Vec<FitRow>,
}

impl SweepResult {
    pub fn has_capacity_failures(&self) -> bool {
        self.complexity.iter().any(|r| r.capacity_exhausted)
    }
}

fn build_spectra(config: &SweepConfig) -> Result<Vec<CoordinateSpectrum>> {
    let mut trunc = Truncation::new(config.trunc_tol);
    if let Some(m) = config.max_len {
        trunc = trunc.with_max_len(m);
    }
    match &config.family {
        FamilyConfig::Korobov { .. } => {
            let params = config.korobov_params()?.expect("korobov family");
            params
                .par_iter()
                .map(|p| korobov_spectrum_with(*p, trunc))
                .collect()
        }
        FamilyConfig::SquaredExponential { .. } => {
            let params = config.sqexp_params()?.expect("squared-exponential family");
            params
                .par_iter()
                .map(|p| sqexp_spectrum_with(*p, trunc))
                .collect()
        }
        FamilyConfig::Explicit { coordinates } => coordinates
            .iter()
            .take(config.max_d())
            .map(|c| explicit_spectrum(&c.values, c.trace))
            .collect(),
    }
}

fn criterion_params(config: &SweepConfig) -> Result<CriterionParams> {
    if let Some(tau) = config.tau {
        return CriterionParams::new(config.gamma, tau);
    }
    match config.korobov_params()? {
        Some(params) => {
            let r0 = params.iter().map(|p| p.r).fold(f64::INFINITY, f64::min);
            let mut p = CriterionParams::for_korobov(r0)?;
            p.gamma = config.gamma;
            Ok(p)
        }
        None => CriterionParams::new(config.gamma, 1.0),
    }
}

fn complexity_rows(d: usize, problem: &ProductProblem, eps_grid: &[f64], limits: EngineLimits) -> Vec<ComplexityRow> {
    let results = complexity_many_with(problem, eps_grid, limits);
    eps_grid
        .iter()
        .zip(results)
        .map(|(&eps, r)| match r {
            Ok(c) => ComplexityRow {
                d,
                eps,
                n: c.n,
                captured_mass: c.captured_mass,
                target_mass: c.target_mass,
                certified: c.certified,
                truncation_slack: c.truncation_slack,
                note: if c.certified {
                    String::new()
                } else {
                    format!(
                        "uncertified: truncation slack {:e} may move the crossing",
                        c.truncation_slack
                    )
                },
                capacity_exhausted: false,
            },
            Err(e) => ComplexityRow {
                d,
                eps,
                n: 0,
                captured_mass: 0.0,
                target_mass: (1.0 - eps * eps) * problem.total_trace(),
                certified: false,
                truncation_slack: problem.total_tail_bound(),
                note: e.to_string(),
                capacity_exhausted: matches!(e, Error::CapacityExhausted(_)),
            },
        })
        .collect()
}

fn family_series(config: &SweepConfig) -> Result<Vec<QuantitySeries>> {
    let grid = &config.d_grid;
    let mut out = Vec::new();
    if let Some(params) = config.korobov_params()? {
        let values = grid
            .iter()
            .map(|&d| korobov_condition_sum(&params, d))
            .collect::<Result<Vec<_>>>()?;
        out.push(QuantitySeries::exact("korobov_condition_sum", grid, values));
    }
    if let Some(params) = config.sqexp_params()? {
        let values = grid
            .iter()
            .map(|&d| sqexp_condition_sum(&params, d))
            .collect::<Result<Vec<_>>>()?;
        out.push(QuantitySeries::exact("sqexp_condition_sum", grid, values));
        // closed-form counterpart of ln_condition_sum
        let l_values = grid
            .iter()
            .map(|&d| {
                let total: f64 = params[..d].iter().map(|p| sqexp_l_closed_form(*p)).sum();
                total / (d as f64).ln().max(1.0)
            })
            .collect();
        out.push(QuantitySeries::exact("sqexp_l_closed_form_sum", grid, l_values));
    }
    Ok(out)
}

fn criterion_rows(series: &QuantitySeries, grid: &[usize]) -> Vec<CriterionRow> {
    grid.iter()
        .zip(series.values.iter().zip(&series.residuals))
        .map(|(&d, (&value, &residual_bound))| CriterionRow {
            d,
            quantity: series.name.clone(),
            value,
            residual_bound,
            trend: series.trend,
        })
        .collect()
}

/// Runs a sweep on the current rayon pool. Output order is fixed by the grids.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, config.limits())
}

/// Runs a sweep on a dedicated pool of `threads` workers.
pub fn run_sweep_on_threads(config: &SweepConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

pub fn run_sweep_with(config: &SweepConfig, limits: EngineLimits) -> Result<SweepResult> {
    config.validate()?;
    let spectra = build_spectra(config)?;
    let mut result = SweepResult::default();

    let needs_engine = config.wants(Output::Complexity) || config.wants(Output::ErrorCurve) || config.wants(Output::QptFit);
    if needs_engine {
        let per_d: Vec<(Vec<ComplexityRow>, Vec<ErrorCurveRow>)> = config
            .d_grid
            .par_iter()
            .map(|&d| {
                let problem = ProductProblem::new(spectra[..d].to_vec())?;
                let rows = complexity_rows(d, &problem, &config.eps_grid, limits);
                let mut curve = Vec::new();
                if config.wants(Output::ErrorCurve) {
                    let n_max = rows.iter().map(|r| r.n).max().unwrap_or(0) as usize;
                    if n_max > 0 {
                        let errors = error_curve(&problem, n_max.min(MAX_ERROR_CURVE_LEN), limits)?;
                        curve = errors
                            .into_iter()
                            .enumerate()
                            .map(|(i, e)| ErrorCurveRow {
                                d,
                                n: i as u64 + 1,
                                relative_error: e,
                            })
                            .collect();
                    }
                }
                Ok((rows, curve))
            })
            .collect::<Result<_>>()?;
        let mut all_rows = Vec::new();
        for (rows, curve) in per_d {
            all_rows.extend(rows);
            result.error_curve.extend(curve);
        }
        if config.wants(Output::QptFit) {
            let samples: Vec<ComplexitySample> = all_rows
                .iter()
                .filter(|r| r.n > 0)
                .map(|r| ComplexitySample {
                    d: r.d,
                    eps: r.eps,
                    n: r.n,
                })
                .collect();
            let fit = qpt_fit(&samples)?;
            result.fit.push(FitRow {
                s_hat: fit.s_hat,
                log_c_hat: fit.log_c_hat,
                max_residual: fit.max_residual,
            });
        }
        if config.wants(Output::Complexity) {
            result.complexity = all_rows;
        }
    }

    if config.wants(Output::Criteria) {
        let normalized: Vec<NormalizedSpectrum> = spectra.par_iter().map(normalize).collect();
        let report = criterion_report(&normalized, &config.d_grid, criterion_params(config)?)?;
        for q in report.quantities() {
            result.criterion.extend(criterion_rows(q, &config.d_grid));
        }
        for q in family_series(config)? {
            result.criterion.extend(criterion_rows(&q, &config.d_grid));
        }
    }
    Ok(result)
}
