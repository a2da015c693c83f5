use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::{ComplexityRow, CriterionRow, ErrorCurveRow, FitRow, SweepResult};
use crate::error::{Error, Result};

pub const COMPLEXITY_HEADER: &str = "kind,d,eps,n,captured_mass,target_mass,certified";
pub const ERROR_CURVE_HEADER: &str = "kind,d,n,relative_error";
pub const CRITERION_HEADER: &str = "kind,d,quantity,value,residual_bound,trend";
pub const FIT_HEADER: &str = "kind,s_hat,log_c_hat,max_residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

/// 17 significant digits.
fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// CSV with one section per non-empty row kind, each led by its header.
/// An empty result is the complexity header alone.
pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let empty = result.complexity.is_empty()
        && result.error_curve.is_empty()
        && result.criterion.is_empty()
        && result.fit.is_empty();
    if !result.complexity.is_empty() || empty {
        out.push_str(COMPLEXITY_HEADER);
        out.push('\n');
        for r in &result.complexity {
            let _ = writeln!(
                out,
                "complexity,{},{},{},{},{},{}",
                r.d,
                float(r.eps),
                r.n,
                float(r.captured_mass),
                float(r.target_mass),
                r.certified
            );
        }
    }
    if !result.error_curve.is_empty() {
        out.push_str(ERROR_CURVE_HEADER);
        out.push('\n');
        for r in &result.error_curve {
            let _ = writeln!(out, "error_curve,{},{},{}", r.d, r.n, float(r.relative_error));
        }
    }
    if !result.criterion.is_empty() {
        out.push_str(CRITERION_HEADER);
        out.push('\n');
        for r in &result.criterion {
            let _ = writeln!(
                out,
                "criterion,{},{},{},{},{}",
                r.d,
                r.quantity,
                float(r.value),
                float(r.residual_bound.unwrap_or(f64::INFINITY)),
                float(r.trend)
            );
        }
    }
    if !result.fit.is_empty() {
        out.push_str(FIT_HEADER);
        out.push('\n');
        for r in &result.fit {
            let _ = writeln!(
                out,
                "fit,{},{},{}",
                float(r.s_hat),
                float(r.log_c_hat),
                float(r.max_residual)
            );
        }
    }
    out
}

fn parse_field<T: FromStr>(field: Option<&str>, line: usize) -> Result<T> {
    let text = field.ok_or_else(|| Error::Config(format!("line {line}: missing field")))?;
    text.parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {text:?}")))
}

/// Parses CSV written by [`to_csv`]. Fields that CSV does not carry
/// (slack, notes) come back empty.
pub fn from_csv(text: &str) -> Result<SweepResult> {
    let mut result = SweepResult::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.is_empty() || line.starts_with("kind,") {
            continue;
        }
        let mut f = line.split(',');
        match f.next() {
            Some("complexity") => result.complexity.push(ComplexityRow {
                d: parse_field(f.next(), ln)?,
                eps: parse_field(f.next(), ln)?,
                n: parse_field(f.next(), ln)?,
                captured_mass: parse_field(f.next(), ln)?,
                target_mass: parse_field(f.next(), ln)?,
                certified: parse_field(f.next(), ln)?,
                truncation_slack: 0.0,
                note: String::new(),
                capacity_exhausted: false,
            }),
            Some("error_curve") => result.error_curve.push(ErrorCurveRow {
                d: parse_field(f.next(), ln)?,
                n: parse_field(f.next(), ln)?,
                relative_error: parse_field(f.next(), ln)?,
            }),
            Some("criterion") => result.criterion.push(CriterionRow {
                d: parse_field(f.next(), ln)?,
                quantity: parse_field(f.next(), ln)?,
                value: parse_field(f.next(), ln)?,
                residual_bound: Some(parse_field::<f64>(f.next(), ln)?).filter(|r| r.is_finite()),
                trend: parse_field(f.next(), ln)?,
            }),
            Some("fit") => result.fit.push(FitRow {
                s_hat: parse_field(f.next(), ln)?,
                log_c_hat: parse_field(f.next(), ln)?,
                max_residual: parse_field(f.next(), ln)?,
            }),
            other => return Err(Error::Config(format!("line {ln}: unknown row kind {other:?}"))),
        }
    }
    Ok(result)
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    serde_json::to_string_pretty(result).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json(text: &str) -> Result<SweepResult> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn render(result: &SweepResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(result)),
        Format::Json => to_json(result),
    }
}

/// Writes the result to `path`.
pub fn emit(result: &SweepResult, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render(result, format)?)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}
