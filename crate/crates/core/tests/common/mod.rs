#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tensor_qpt::{explicit_spectrum, CoordinateSpectrum, ProductProblem};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Eigenvalues log-uniform in `[1e-6, 1]`.
pub fn random_values(rng: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| 10f64.powf(rng.random_range(-6.0..=0.0))).collect()
}

pub fn random_coordinate(rng: &mut StdRng, max_len: usize) -> CoordinateSpectrum {
    let len = rng.random_range(1..=max_len);
    explicit_spectrum(&random_values(rng, len), None).unwrap()
}

pub fn random_problem(rng: &mut StdRng, max_d: usize, max_len: usize) -> ProductProblem {
    let d = rng.random_range(1..=max_d);
    ProductProblem::new((0..d).map(|_| random_coordinate(rng, max_len)).collect()).unwrap()
}

/// All products of the retained eigenvalues, non-increasing.
pub fn all_products(problem: &ProductProblem) -> Vec<f64> {
    let mut out = vec![1.0];
    for c in problem.coordinates() {
        out = out
            .iter()
            .flat_map(|&p| c.eigenvalues().iter().map(move |&x| p * x))
            .collect();
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `-zeta'(p) = sum_k ln k / k^p`, summed directly up to `n` with the
/// integral of the remainder from `n + 1/2`.
pub fn neg_zeta_derivative(p: f64, n: u64) -> f64 {
    let mut sum = 0.0;
    for k in (2..=n).rev() {
        let k = k as f64;
        sum += k.ln() * k.powf(-p);
    }
    // int_x^inf ln t t^-p dt = x^(1-p) (ln x / (p-1) + 1/(p-1)^2)
    let x = n as f64 + 0.5;
    sum + x.powf(1.0 - p) * (x.ln() / (p - 1.0) + 1.0 / ((p - 1.0) * (p - 1.0)))
}

/// `zeta(p)` by reverse direct summation of `n` terms plus the integral
/// of the remainder from `n + 1/2`.
pub fn slow_zeta(p: f64, n: u64) -> f64 {
    let mut sum = 0.0;
    for k in (1..=n).rev() {
        sum += (k as f64).powf(-p);
    }
    sum + (n as f64 + 0.5).powf(1.0 - p) / (p - 1.0)
}
