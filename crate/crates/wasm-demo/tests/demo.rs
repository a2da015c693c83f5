use tensor_qpt_wasm_demo::{complexity_points, condition_points, spectrum_points, Family};

#[test]
fn family_names() {
    assert_eq!(Family::parse("korobov").unwrap(), Family::Korobov);
    assert_eq!(Family::parse("sqexp").unwrap(), Family::SquaredExponential);
    assert!(Family::parse("matern").is_err());
}

#[test]
fn korobov_spectrum_points() {
    let pts = spectrum_points(Family::Korobov, 1.0, 1.0, 5).unwrap();
    let trace = 1.0 + 2.0 * std::f64::consts::PI.powi(2) / 6.0;
    assert_eq!(pts.len(), 5);
    assert_eq!(pts[0].k, 1);
    assert!((pts[0].value - 1.0 / trace).abs() < 1e-15);
    assert_eq!(pts[1].value, pts[2].value);
    assert!((pts[3].value * 4.0 - pts[1].value).abs() < 1e-15);
}

#[test]
fn complexity_grows_as_eps_shrinks() {
    let eps = [0.5, 0.2, 0.1, 0.05];
    let pts = complexity_points(Family::SquaredExponential, 1.0, 0.0, 3, &eps).unwrap();
    let ns: Vec<u64> = pts.iter().map(|p| p.n.unwrap()).collect();
    assert!(ns.windows(2).all(|w| w[0] <= w[1]), "{ns:?}");
    assert!(pts.iter().all(|p| p.certified));
    assert!(complexity_points(Family::Korobov, 2.0, 1.0, 2, &eps).is_err());
    assert!(complexity_points(Family::Korobov, 1.0, 1.0, 0, &eps).is_err());
}

#[test]
fn capacity_limited_points_are_empty() {
    let pts = complexity_points(Family::Korobov, 1.0, 1.0, 16, &[0.5, 0.01]).unwrap();
    assert!(pts[1].n.is_none() && !pts[1].certified);
}

#[test]
fn condition_trends() {
    let constant = condition_points(Family::Korobov, 1.0, 0.0, 0.0, 1.0, 1024).unwrap();
    assert_eq!(constant.points.len(), 11);
    assert!(constant.trend > 0.5);
    let decaying = condition_points(Family::Korobov, 1.0, -2.0, 0.0, 1.0, 1024).unwrap();
    assert!(decaying.trend < 0.0);
    // sigma_j^2 = j ln^3(j + 1): the sum stays bounded, so dividing by ln d pulls it down
    let widening = condition_points(Family::SquaredExponential, 1.0, 0.5, 1.5, 0.0, 1 << 14).unwrap();
    assert!(widening.trend < 0.0);
    let tail = &widening.points[4..];
    assert!(tail.windows(2).all(|w| w[1].value < w[0].value));
    let flat = condition_points(Family::SquaredExponential, 1.0, 0.0, 0.0, 0.0, 1024).unwrap();
    assert!(flat.trend > 0.5);
    assert!(condition_points(Family::Korobov, 1.0, 0.0, 0.0, 1.0, 0).is_err());
}
