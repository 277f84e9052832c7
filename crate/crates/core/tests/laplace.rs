use std::f64::consts::PI;

use mz_core::laplace::{a_coeffs, fit_b, fit_free_constant, kober_residual, l1, l1_bar};
use mz_core::quadrature::QuadSpec;
use mz_core::rational::to_f64;
use mz_core::EULER_GAMMA;

const SET_A: [f64; 8] = [50.0, 70.0, 100.0, 140.0, 200.0, 280.0, 400.0, 560.0];
const SET_B: [f64; 8] = [60.0, 85.0, 120.0, 170.0, 240.0, 340.0, 480.0, 680.0];

fn spec() -> QuadSpec {
    QuadSpec::with_tol(1e-10)
}

#[test]
fn laplace_matches_oracle() {
    let cases = [
        (1.0 / 25.0, 52.072_974_744_649_4),
        (1.0 / 100.0, 337.587_168_420_449),
        (1.0 / 400.0, 1_895.461_676_937_27),
        (1.0, 1.017_502_741_409_73),
        (50.0, 0.042_527_203_203_458_12),
    ];
    for (sigma, want) in cases {
        let r = l1(sigma, &spec()).unwrap();
        assert!(
            (r.value - want).abs() <= r.abs_err + 1e-13 * want,
            "L1({sigma}) = {} vs {want}",
            r.value
        );
    }
    let b = l1_bar(1.0, &spec()).unwrap();
    assert!((b.value - 0.136_678_628_572_009).abs() <= b.abs_err + 1e-14);
}

#[test]
fn watson_limit_at_large_sigma() {
    let zeta_half = -1.460_354_508_809_586_8f64;
    let r = l1(50.0, &spec()).unwrap().value;
    assert!((r / (zeta_half * zeta_half / 50.0) - 1.0).abs() <= 0.05);
}

#[test]
fn kober_residual_tends_to_pi() {
    let ts = [25.0, 100.0, 400.0, 1600.0];
    let res: Vec<f64> = ts.iter().map(|&t| kober_residual(t, &spec()).unwrap().value).collect();
    assert!((res[1] - PI).abs() <= 0.5);
    assert!((res[2] - PI).abs() < (res[0] - PI).abs());
    for (t, r) in ts.iter().zip(&res) {
        assert!((r - PI).abs() * t.powf(0.25) <= 0.1);
    }
}

#[test]
fn bar_grows_like_log_over_x() {
    let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&x| l1_bar(x, &spec()).unwrap().value / ((1.0 / x) * (1.0 / x).ln()))
        .collect();
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
}

#[test]
fn inversion_identity() {
    let t = a_coeffs(10).unwrap();
    for tt in [2.0, 4.0, 7.5, 30.0, 250.0] {
        let s: f64 =
            t.a.iter()
                .enumerate()
                .map(|(k, a)| to_f64(a) * f64::powi(tt, 1 - 2 * k as i32))
                .sum();
        assert!((s * 2.0 * (0.5 / tt).sin() - 1.0).abs() <= 1e-12, "T = {tt}");
    }
}

#[test]
fn one_fitted_term_beats_none() {
    let f0 = fit_b(0, &SET_A, &spec()).unwrap();
    let f1 = fit_b(1, &SET_A, &spec()).unwrap();
    assert_eq!(f0.b, vec![PI]);
    assert!(f1.fit_residual < f0.fit_residual);
}

#[test]
fn disjoint_samples_agree() {
    let a = fit_b(1, &SET_A, &spec()).unwrap();
    let b = fit_b(1, &SET_B, &spec()).unwrap();
    assert!((a.b[1] - b.b[1]).abs() <= 3.0 * (a.b_stderr[1] + b.b_stderr[1]));
}

#[test]
fn model_error_decreases_with_n_at_fifty() {
    let samples: Vec<f64> = (0..12).map(|k| 50.0 * 1.3f64.powi(k)).collect();
    let exact = l1(1.0 / 50.0, &spec()).unwrap().value;
    let errs: Vec<f64> = (0..=3)
        .map(|n| (fit_b(n, &samples, &spec()).unwrap().model(50.0) - exact).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn free_constant_is_near_pi() {
    let samples: Vec<f64> = (0..12).map(|k| 50.0 * 1.3f64.powi(k)).collect();
    for n in 0..=2 {
        let (b0, _se) = fit_free_constant(n, &samples, &spec()).unwrap();
        assert!((b0 - PI).abs() <= 5e-3);
    }
}

#[test]
fn leading_coefficient_is_one() {
    let t = 2000.0;
    let l = l1(1.0 / t, &spec()).unwrap().value;
    let lead = t * ((t / (2.0 * PI)).ln() + EULER_GAMMA);
    assert!((l / lead - 1.0).abs() <= 1e-3);
}
