mod common;

use common::{neg_zeta_derivative, rel_diff};
use tensor_qpt::spectra::{korobov_spectrum_with, Truncation};
use tensor_qpt::tractability::{
    exp_condition_sum, exp_condition_term, ln_condition_term, sqexp_l_closed_form,
};
use tensor_qpt::*;

/// `[2 / (1 + 2 g0 zeta(2)), 2 (zeta(2) + 2 g0 zeta(2)^2 + 2 (-zeta'(2)))]` for `r = 1`.
fn korobov_bracket(g0: f64) -> (f64, f64) {
    let z = zeta(2.0).unwrap();
    let dz = neg_zeta_derivative(2.0, 1_000_000);
    (2.0 / (1.0 + 2.0 * g0 * z), 2.0 * (z + 2.0 * g0 * z * z + 2.0 * dz))
}

#[test]
fn korobov_ratio_stays_in_fixed_bracket() {
    let trunc = Truncation::new(1e-12).with_max_len(4097);
    let sequences: [(&str, fn(f64) -> f64); 3] = [
        ("j^-2", |j| j.powi(-2)),
        ("j^-1/2", |j| j.powf(-0.5)),
        ("1/2", |_| 0.5),
    ];
    for (name, g_of) in sequences {
        let g0 = (1..=10_000).map(|j| g_of(j as f64)).fold(0.0, f64::max);
        let (low, high) = korobov_bracket(g0);
        let mut seen = (f64::INFINITY, 0.0f64);
        for j in 1..=10_000 {
            let g = g_of(j as f64);
            let params = KorobovParams::new(g, 1.0).unwrap();
            let term = ln_condition_term(&normalize(&korobov_spectrum_with(params, trunc).unwrap()));
            let ratio = term / ((1.0 + g.ln().abs()) * g);
            seen = (seen.0.min(ratio), seen.1.max(ratio));
        }
        assert!(low <= seen.0 && seen.1 <= high, "{name}: {seen:?} outside [{low}, {high}]");
    }
}

#[test]
fn korobov_small_eigenvalue_sum_stays_bounded() {
    // g bounded below, r0 = 1, tau = 2: tau (1 - 1/(2 r0)) = 1
    let params = CriterionParams::for_korobov(1.0).unwrap();
    assert_eq!(params.tau, 2.0);
    let spec = normalize(&korobov_spectrum(KorobovParams::new(0.5, 1.0).unwrap(), 1e-12).unwrap());
    let values: Vec<f64> = [10usize, 100, 1_000, 10_000]
        .iter()
        .map(|&d| d as f64 * exp_condition_term(&spec, d, params))
        .collect();
    let direct = exp_condition_sum(&vec![spec.clone(); 100], 100, params).unwrap();
    assert!(rel_diff(direct, values[1]) < 1e-12);
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi <= 2.0 * lo && hi < 10.0, "{values:?}");
    assert!(values.windows(2).all(|w| w[1] <= w[0] * 1.05), "{values:?}");
}

#[test]
fn sqexp_terms_match_closed_form() {
    let mut sigma = 0.05;
    while sigma < 50.0 {
        let params = SqExpParams::new(sigma).unwrap();
        let series = ln_condition_term(&normalize(&sqexp_spectrum(params, 1e-15).unwrap()));
        assert!(rel_diff(series, sqexp_l_closed_form(params)) <= 1e-10, "sigma {sigma}");
        sigma *= 1.3;
    }
}
