mod common;

use common::*;
use tensor_qpt::engine::{brute_force_complexity, complexity_by_counting, EngineLimits};
use tensor_qpt::spectra::{korobov_spectrum_with, Truncation};
use tensor_qpt::tractability::{ln_condition_term, sqexp_l_closed_form};
use tensor_qpt::*;

#[test]
fn zeta_matches_slow_summation() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        let slow = slow_zeta(p, 10_000_000);
        let fast = zeta(p).unwrap();
        assert!(rel_diff(fast, slow) <= 1e-10, "p = {p}: {fast} vs {slow}");
    }
}

#[test]
fn korobov_structure() {
    for (g, r) in [(1.0, 1.0), (0.3, 0.75), (0.01, 2.5)] {
        let params = KorobovParams::new(g, r).unwrap();
        let s = korobov_spectrum(params, 1e-12).unwrap();
        let v = s.eigenvalues();
        assert_eq!(v[0], 1.0);
        for k in 1..(v.len() - 1) / 2 {
            assert_eq!(v[2 * k - 1], v[2 * k], "pair {k}");
        }
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
        let trace = 1.0 + 2.0 * g * slow_zeta(2.0 * r, 2_000_000);
        assert!(rel_diff(s.trace(), trace) < 1e-10);
        let total = s.retained_sum() + s.tail_bound();
        assert!(total >= s.trace() * (1.0 - 1e-12) && total <= s.trace() * (1.0 + 1e-12));
    }
}

#[test]
fn sqexp_structure() {
    for sigma in [0.3, 1.0, 4.0] {
        let params = SqExpParams::new(sigma).unwrap();
        let s = sqexp_spectrum(params, 1e-12).unwrap();
        let v = s.eigenvalues();
        let omega = params.omega();
        assert!(v.windows(2).all(|w| w[1] == w[0] * omega));
        // omega = 1 / (1 + sigma^2 I) with I = (1 + sqrt(1 + 4/sigma^2)) / 2
        let i = 0.5 + 0.5 * (1.0 + 4.0 / (sigma * sigma)).sqrt();
        assert!(rel_diff(omega, 1.0 / (1.0 + sigma * sigma * i)) < 1e-15);
        assert_eq!(s.trace(), 1.0);
        let total = s.retained_sum() + s.tail_bound();
        assert!((total - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn top_products_match_sorted_lattice() {
    let mut rng = rng(11);
    for _ in 0..100 {
        let p = random_problem(&mut rng, 4, 12);
        let all = all_products(&p);
        let n = all.len().min(200);
        let top = top_products(&p, n).unwrap();
        assert!(top.windows(2).all(|w| w[0] >= w[1]));
        for (a, b) in top.iter().zip(&all) {
            assert!(rel_diff(*a, *b) <= 1e-14);
        }
    }
}

#[test]
fn counting_and_stream_agree_with_brute_force() {
    let mut rng = rng(12);
    let limits = EngineLimits::default();
    for _ in 0..150 {
        let p = random_problem(&mut rng, 4, 20);
        for eps in [0.9, 0.5, 0.1, 0.01] {
            let brute = brute_force_complexity(&p, eps).unwrap();
            let stream = complexity(&p, eps).unwrap();
            let counted = complexity_by_counting(&p, eps, limits).unwrap();
            if brute.certified {
                assert_eq!(stream.n, brute.n);
                assert_eq!(counted.n, brute.n);
            }
        }
    }
}

#[test]
fn geometric_closed_form() {
    for sigma in [0.5, 1.0, 2.0] {
        let params = SqExpParams::new(sigma).unwrap();
        let p = ProductProblem::new(vec![sqexp_spectrum(params, 1e-12).unwrap()]).unwrap();
        for eps in [0.5, 0.1, 0.01, 1e-4] {
            let expected = (2.0 * f64::ln(eps) / params.omega().ln()).ceil() as u64;
            let r = complexity(&p, eps).unwrap();
            assert_eq!(r.n, expected, "sigma {sigma} eps {eps}");
            assert!(r.certified);
        }
    }
}

/// `sum_{k>=2} (1 + |ln x_k|) x_k` for a Korobov coordinate, from
/// `zeta(2r)` and `-zeta'(2r)`.
fn korobov_l_series(g: f64, r: f64) -> f64 {
    let z = slow_zeta(2.0 * r, 1_000_000);
    let dz = neg_zeta_derivative(2.0 * r, 1_000_000);
    let t = 1.0 + 2.0 * g * z;
    2.0 * g / t * (z * (1.0 + t.ln() - g.ln()) + 2.0 * r * dz)
}

#[test]
fn korobov_ln_condition_matches_series() {
    let trunc = Truncation::new(1e-12).with_max_len(1 << 21);
    for (g, r) in [(1.0, 1.0), (0.25, 1.0), (0.05, 1.5), (0.7, 3.0)] {
        let s = normalize(&korobov_spectrum_with(KorobovParams::new(g, r).unwrap(), trunc).unwrap());
        let term = ln_condition_term(&s);
        let series = korobov_l_series(g, r);
        // what truncation leaves out is below the reported tail bound
        let bound = s.tail_entropy_sum().unwrap() + s.tail_bound();
        assert!(term <= series && series - term <= bound + 1e-12, "g {g} r {r}: {term} {series} {bound}");
    }
}

#[test]
fn sqexp_ln_condition_matches_closed_form() {
    for sigma in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let params = SqExpParams::new(sigma).unwrap();
        let term = ln_condition_term(&normalize(&sqexp_spectrum(params, 1e-15).unwrap()));
        let closed = sqexp_l_closed_form(params);
        assert!(rel_diff(term, closed) <= 1e-10, "sigma {sigma}");
    }
}
