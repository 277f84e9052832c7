use std::f64::consts::PI;

use proptest::prelude::*;

use mz_core::quadrature::{cumulative, integrate, integrate_complex, QuadSpec};
use mz_core::zeta::{hardy_z, ZetaOptions};

type Case = (Box<dyn Fn(f64) -> f64>, f64, f64, f64);

fn closed_forms() -> Vec<Case> {
    let mut v: Vec<Case> = Vec::new();
    for k in 0..7 {
        for b in [0.5, 1.0, 2.0, 3.0] {
            v.push((
                Box::new(move |x: f64| x.powi(k)),
                0.0,
                b,
                b.powi(k + 1) / (k + 1) as f64,
            ));
        }
    }
    for a in [-3.0, -1.0, 0.5, 2.0, 5.0] {
        v.push((Box::new(move |x: f64| (a * x).exp()), 0.0, 1.0, (a.exp() - 1.0) / a));
    }
    for w in [1.0, 7.0, 30.0, 100.0] {
        v.push((Box::new(move |x: f64| (w * x).cos()), 0.0, PI, (w * PI).sin() / w));
        v.push((
            Box::new(move |x: f64| (w * x).sin()),
            0.0,
            2.0,
            (1.0 - (2.0 * w).cos()) / w,
        ));
    }
    for b in [1.0, 10.0, 100.0] {
        v.push((Box::new(|x: f64| 1.0 / (1.0 + x * x)), 0.0, b, b.atan()));
    }
    v.push((Box::new(|x: f64| x.sqrt()), 0.0, 1.0, 2.0 / 3.0));
    v.push((Box::new(|x: f64| x.ln()), 1.0, 5.0, 5.0 * 5f64.ln() - 4.0));
    v.push((Box::new(|x: f64| (50.0 * x.ln()).cos()), 1.0, 10.0, {
        let f = |x: f64| x * ((50.0 * x.ln()).cos() + 50.0 * (50.0 * x.ln()).sin()) / 2501.0;
        f(10.0) - f(1.0)
    }));
    v
}

#[test]
fn error_estimates_are_honest_on_closed_forms() {
    let cases = closed_forms();
    let mut honest = 0;
    for tol in [1e-6, 1e-9, 1e-12] {
        for (f, a, b, exact) in &cases {
            let r = integrate(f, *a, *b, &QuadSpec::with_tol(tol)).unwrap();
            let err = (r.value - exact).abs();
            assert!(
                err <= tol.max(1e-14) * exact.abs().max(1.0) * 10.0,
                "∫[{a}, {b}] err {err:e}"
            );
            if err <= 10.0 * r.abs_err {
                honest += 1;
            }
        }
    }
    let total = 3 * cases.len();
    assert!(honest as f64 >= 0.99 * total as f64, "{honest} of {total} honest");
}

#[test]
fn log_phase_example() {
    let f = |x: f64| x * ((50.0 * x.ln()).cos() + 50.0 * (50.0 * x.ln()).sin()) / 2501.0;
    let exact = f(10.0) - f(1.0);
    let r = integrate_complex(|_| 1.0, 0.0, 50.0, 1.0, 10.0, &QuadSpec::with_tol(1e-12)).unwrap();
    assert!((r.value.re - exact).abs() <= 1e-11);
}

#[test]
fn complex_path_matches_real_path_for_real_exponent() {
    let opts = ZetaOptions::default();
    let z2 = |x: f64| hardy_z(x, &opts).unwrap().value.powi(2);
    let spec = QuadSpec::with_tol(1e-11);
    let c = integrate_complex(z2, 1.5, 0.0, 1.0, 100.0, &spec).unwrap();
    let r = integrate(|x| z2(x) * x.powf(-1.5), 1.0, 100.0, &spec.with_osc(2.0)).unwrap();
    assert!((c.value.re - r.value).abs() <= c.abs_err + r.abs_err + 1e-12);
    assert_eq!(c.value.im, 0.0);
}

#[test]
fn cumulative_refinement_does_not_lose_accuracy() {
    let spec = QuadSpec::with_tol(1e-12);
    type Pair = (fn(f64) -> f64, fn(f64) -> f64);
    let cases: [Pair; 3] = [
        (|x| x.sin(), |x| 1.0 - x.cos()),
        (|x| (-x).exp(), |x| 1.0 - (-x).exp()),
        (|x| 1.0 / (1.0 + x), |x| x.ln_1p()),
    ];
    for (f, antider) in cases {
        let reference = antider(8.0);
        let mut prev = f64::INFINITY;
        for step in [2.0, 1.0, 0.5, 0.25] {
            let g = cumulative(f, 0.0, 8.0, step, &spec).unwrap();
            let err = (g.prefix.last().unwrap() - reference).abs();
            assert!(
                err <= prev + 4.0 * f64::EPSILON * reference.abs(),
                "step {step}: {err:e} > {prev:e}"
            );
            assert!(err <= g.total_err() + 1e-15);
            prev = err;
        }
    }
}

#[test]
fn cumulative_z_squared_matches_single_integral() {
    let opts = ZetaOptions::default();
    let z2 = |x: f64| hardy_z(x, &opts).unwrap().value.powi(2);
    let spec = QuadSpec::with_tol(1e-11);
    let g = cumulative(z2, 0.0, 50.0, 0.5, &spec).unwrap();
    let r = integrate(z2, 0.0, 50.0, &spec.with_osc(2.0)).unwrap();
    assert!((g.prefix.last().unwrap() - r.value).abs() <= g.total_err() + r.abs_err);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oscillation_hint_forces_quarter_period_panels(omega in 1.0f64..200.0, b in 0.5f64..5.0) {
        let spec = QuadSpec::with_tol(1e-3).with_osc(omega);
        let r = integrate(|x| (omega * x).cos(), 0.0, b, &spec).unwrap();
        let quarter = 2.0 * PI / (4.0 * omega);
        let min_panels = (b / quarter).ceil() as u64;
        prop_assert!(r.n_evals >= 15 * min_panels, "{} evaluations for {} quarter periods", r.n_evals, min_panels);
        prop_assert!((r.value - (omega * b).sin() / omega).abs() <= 1e-3);
    }

    #[test]
    fn polynomial_rule_is_exact(c in proptest::collection::vec(-5.0f64..5.0, 1..10), b in 0.1f64..4.0) {
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck);
        let exact: f64 = c.iter().enumerate().map(|(k, ck)| ck * b.powi(k as i32 + 1) / (k + 1) as f64).sum();
        let r = integrate(f, 0.0, b, &QuadSpec::default()).unwrap();
        prop_assert!((r.value - exact).abs() <= 1e-12 * (1.0 + exact.abs()) + r.abs_err);
    }
}
