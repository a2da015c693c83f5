//! Average-case approximation complexity of tensor-product random elements
//! and quasi-polynomial tractability (QPT) criteria.
//!
//! - [`spectra`]: per-coordinate eigenvalue sequences (Korobov,
//!   squared-exponential, explicit) with rigorous truncation bounds.
//! - [`engine`]: the ordered product spectrum and `n(eps, d)`, plus a
//!   brute-force oracle.
//! - [`tractability`]: criterion sums along a `d` grid and the QPT exponent fit.
//! - [`sweep`]: config-driven sweeps and CSV/JSON output.

pub mod engine;
pub mod error;
pub mod spectra;
pub mod summation;
pub mod sweep;
pub mod tractability;

pub use engine::{
    brute_force_complexity, complexity, tail_mass_at, top_products, ComplexityResult, EngineLimits,
    ProductProblem,
};
pub use error::{Error, Result};
pub use spectra::{
    explicit_spectrum, korobov_spectrum, normalize, sqexp_spectrum, zeta, CoordinateSpectrum, KorobovParams,
    NormalizedSpectrum, SqExpParams, Truncation,
};
pub use tractability::{CriterionParams, CriterionReport, QptFit};
