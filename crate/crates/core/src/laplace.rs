//! The Laplace transform L1(σ) = ∫_0^∞ Z(x)² e^(−σx) dx and the coefficients of
//! its expansion in T = 1/σ,
//!
//! ```text
//! L1(1/T) ~ (log(T/2π) + γ) Σ a_n T^(1−2n) + Σ b_n T^(−2n),   a_0 = 1, b_0 = π.
//! ```
//!
//! The a_n are exact rationals; b_n for n ≥ 1 are least-squares diagnostics.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Number, Value};

use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::quadrature::{integrate, QuadSpec, GK15_GAUSS, GK15_KRONROD, GK15_NODES};
use crate::rational::{to_f64, u_over_sin_u};
use crate::samples::{store, Z2Data, CELL};
use crate::sum::Neumaier;
use crate::zeta::{z_squared, z_squared_err};
use crate::{EULER_GAMMA, LN_2PI};

/// Largest n accepted by [`a_coeffs`].
pub const MAX_A_INDEX: usize = 20;

/// Condition-number limit of the (column-scaled) least-squares design.
pub const MAX_CONDITION: f64 = 1e10;

/// Cutoff X_c = (40 + 2 log(1/σ))/σ, never below 1.
pub fn cutoff(sigma: f64) -> f64 {
    ((40.0 + 2.0 * (1.0 / sigma).ln()) / sigma).max(1.0)
}

/// Closed form of ∫_X^∞ (max(log(x/2π), 0) + 3) e^(−σx) dx, bounded via E1(z) ≤ e^(−z)/z.
pub fn tail_bound(sigma: f64, x: f64) -> f64 {
    let l = (x.ln() - LN_2PI).max(0.0);
    (-sigma * x).exp() * ((l + 3.0) / sigma + 1.0 / (sigma * sigma * x))
}

/// Σ over table cells [i0, i1) of ∫ Z² e^(−σx).
fn table_sum(data: &Z2Data, sigma: f64, i0: usize, i1: usize) -> (f64, f64) {
    let h = 0.5 * CELL;
    let mut acc = Neumaier::default();
    let mut err = 0.0;
    for i in i0..i1 {
        let a = Z2Data::cell_start(i);
        let z2 = data.nodes(i);
        let (mut k, mut g, mut fe) = (0.0, 0.0, 0.0);
        for j in 0..15 {
            let x = a + h * (1.0 + GK15_NODES[j]);
            let w = (-sigma * x).exp();
            k += GK15_KRONROD[j] * z2[j] * w;
            g += GK15_GAUSS[j] * z2[j] * w;
            fe += GK15_KRONROD[j] * z_squared_err(x, z2[j]) * w;
        }
        acc.add(h * k);
        err += h * (k - g).abs() + h * fe;
    }
    let v = acc.total();
    (v, err + 4.0 * f64::EPSILON * v.abs() * ((i1 - i0) as f64).sqrt())
}

/// ∫_lo^∞ Z(x)² e^(−σx) dx for lo ∈ {0, 1}.
fn laplace_from(lo: f64, sigma: f64, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "Laplace transform needs sigma > 0 (got {sigma})"
        )));
    }
    let xc = lo + cutoff(sigma);
    if sigma < 1.0 {
        let data = store().ensure(xc)?;
        let i0 = (lo / CELL).round() as usize;
        let i1 = (xc / CELL).ceil() as usize;
        let x_end = Z2Data::cell_start(i1);
        let (v, e) = table_sum(&data, sigma, i0, i1);
        let tail = tail_bound(sigma, x_end);
        return Ok(EvalResult::new(v, e + tail).with_work((i1 - i0) as u64, 15 * (i1 - i0) as u64));
    }
    let s = spec.with_osc(0.0);
    let r = integrate(|x| z_squared(x) * (-sigma * x).exp(), lo, xc, &s)?;
    let fe = z_squared_err(xc, 1.0) * (1.0 - (-sigma * (xc - lo)).exp()) / sigma;
    Ok(EvalResult::new(r.value, r.abs_err + fe + tail_bound(sigma, xc)).with_work(r.n_terms, r.n_evals))
}

/// L1(σ) = ∫_0^∞ Z(x)² e^(−σx) dx.
///
/// Below σ = 1 the shared Z² table is summed; above it the integral over
/// [0, X_c] is computed adaptively. σ must keep X_c inside the table limit.
pub fn l1(sigma: f64, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    laplace_from(0.0, sigma, spec)
}

/// L̄1(x) = ∫_1^∞ Z(y)² e^(−xy) dy = L1(x) − ∫_0^1 Z(y)² e^(−xy) dy.
///
/// The subtraction is done cellwise (cells from y = 1 on), so no cancellation
/// occurs for large x.
pub fn l1_bar(x: f64, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    laplace_from(1.0, x, spec)
}

/// L1(1/T) − T(log(T/2π) + γ), which tends to π.
pub fn kober_residual(t: f64, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    if !(t >= 10.0) {
        return Err(Error::domain(format!("kober_residual needs T >= 10 (got {t})")));
    }
    let l = l1(1.0 / t, spec)?;
    let main = t * (t.ln() - LN_2PI + EULER_GAMMA);
    Ok(EvalResult::new(l.value - main, l.abs_err + 4.0 * f64::EPSILON * main.abs()).with_work(l.n_terms, l.n_evals))
}

/// Expansion coefficients: exact a_n and b_0 = π, fitted b_1..b_N.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub a: Vec<BigRational>,
    /// b[0] = π exactly; b[1..] fitted.
    pub b: Vec<f64>,
    /// Standard errors of b (0 for b[0]).
    pub b_stderr: Vec<f64>,
    pub n: usize,
    /// Largest absolute residual of the fit over the samples.
    pub fit_residual: f64,
    /// Column-scaled condition number of the design (1 when nothing is fitted).
    pub condition: f64,
}

/// a_0..a_N with a_n = β_n / 4^n, β_n the coefficients of u/sin u = Σ β_n u^(2n).
pub fn a_coeffs(n: usize) -> Result<CoeffTable> {
    if n > MAX_A_INDEX {
        return Err(Error::domain(format!("a_coeffs supports N <= {MAX_A_INDEX} (got {n})")));
    }
    let beta = u_over_sin_u(n);
    let mut four = BigInt::one();
    let a = beta
        .into_iter()
        .map(|b| {
            let q = b / BigRational::from_integer(four.clone());
            four *= 4;
            q
        })
        .collect();
    Ok(CoeffTable {
        a,
        b: vec![PI],
        b_stderr: vec![0.0],
        n,
        fit_residual: f64::NAN,
        condition: 1.0,
    })
}

impl CoeffTable {
    /// (log(T/2π) + γ) Σ a_n T^(1−2n) + Σ b_n T^(−2n).
    pub fn model(&self, t: f64) -> f64 {
        let l = t.ln() - LN_2PI + EULER_GAMMA;
        let mut s = Neumaier::default();
        for (k, a) in self.a.iter().enumerate() {
            s.add(l * to_f64(a) * t.powi(1 - 2 * k as i32));
        }
        for (k, b) in self.b.iter().enumerate() {
            s.add(b * t.powi(-2 * k as i32));
        }
        s.total()
    }

    pub fn to_json(&self) -> Value {
        let big = |v: &BigInt| Value::Number(Number::from_str(&v.to_string()).expect("integer literal"));
        let a: Vec<Value> = self
            .a
            .iter()
            .map(|q| json!({"num": big(q.numer()), "den": big(q.denom())}))
            .collect();
        let fit = if self.fit_residual.is_finite() {
            json!(self.fit_residual)
        } else {
            Value::Null
        };
        json!({
            "a": a,
            "b": self.b,
            "b_stderr": self.b_stderr,
            "fit_residual": fit,
            "provenance": {"b0": "exact", "b>0": "fitted"},
        })
    }
}

/// Least-squares solution with standard errors, column scaling and a condition check.
fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let (m, p) = design.shape();
    let scale: Vec<f64> = (0..p).map(|j| design.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = design.clone();
    for j in 0..p {
        scaled.column_mut(j).scale_mut(1.0 / scale[j]);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let y = svd.solve(rhs, 0.0).map_err(|e| Error::domain(e.to_string()))?;
    let resid = rhs - &scaled * &y;
    let dof = (m - p).max(1) as f64;
    let s2 = resid.norm_squared() / dof;
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut se = DVector::zeros(p);
    for j in 0..p {
        let mut acc = 0.0;
        for k in 0..p {
            acc += (v_t[(k, j)] / svd.singular_values[k]).powi(2);
        }
        se[j] = (s2 * acc).sqrt() / scale[j];
    }
    let coef = DVector::from_iterator(p, (0..p).map(|j| y[j] / scale[j]));
    Ok((coef, se, cond))
}

fn sorted_samples(t_samples: &[f64], min_len: usize) -> Result<Vec<f64>> {
    let mut ts = t_samples.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < min_len {
        return Err(Error::domain(format!(
            "need at least {min_len} distinct samples, got {}",
            ts.len()
        )));
    }
    if ts.iter().any(|&t| !(t >= 50.0)) {
        return Err(Error::domain("fit samples must satisfy T >= 50"));
    }
    Ok(ts)
}

/// Fits b_1..b_N to L1(1/T) with a_0..a_N and b_0 = π held exact.
pub fn fit_b(n: usize, t_samples: &[f64], spec: &QuadSpec) -> Result<CoeffTable> {
    let ts = sorted_samples(t_samples, 2 * n + 3)?;
    let mut table = a_coeffs(n)?;
    let values: Vec<f64> = ts
        .iter()
        .map(|&t| l1(1.0 / t, spec).map(|r| r.value))
        .collect::<Result<_>>()?;
    let resid: Vec<f64> = ts.iter().zip(&values).map(|(&t, &v)| v - table.model(t)).collect();
    if n == 0 {
        table.fit_residual = resid.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        return Ok(table);
    }
    let design = DMatrix::from_fn(ts.len(), n, |i, j| ts[i].powi(-2 * (j as i32 + 1)));
    let rhs = DVector::from_vec(resid);
    let (coef, se, cond) = least_squares(&design, &rhs)?;
    table.b.extend(coef.iter());
    table.b_stderr.extend(se.iter());
    table.condition = cond;
    table.fit_residual = ts
        .iter()
        .zip(&values)
        .fold(0.0f64, |m, (&t, &v)| m.max((v - table.model(t)).abs()));
    Ok(table)
}

/// Diagnostic fit with the constant term free: returns (b_0 estimate, its standard error).
pub fn fit_free_constant(n: usize, t_samples: &[f64], spec: &QuadSpec) -> Result<(f64, f64)> {
    let ts = sorted_samples(t_samples, 2 * n + 3)?;
    let mut table = a_coeffs(n)?;
    table.b.clear();
    let design = DMatrix::from_fn(ts.len(), n + 1, |i, j| ts[i].powi(-2 * j as i32));
    let rhs = ts
        .iter()
        .map(|&t| l1(1.0 / t, spec).map(|r| r.value - table.model(t)))
        .collect::<Result<Vec<_>>>()?;
    let (coef, se, _) = least_squares(&design, &DVector::from_vec(rhs))?;
    Ok((coef[0], se[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn first_coefficients_are_exact() {
        let t = a_coeffs(3).unwrap();
        assert_eq!(t.a[0], q(1, 1));
        assert_eq!(t.a[1], q(1, 24));
        // β_2 = 7/360
        assert_eq!(t.a[2], q(7, 360 * 16));
        assert_eq!(t.b, vec![PI]);
        assert!(a_coeffs(21).unwrap_err().is_domain());
    }

    #[test]
    fn sine_reconstruction() {
        let t = a_coeffs(6).unwrap();
        for tt in [3.0, 5.0, 10.0, 20.0, 100.0] {
            let s: f64 =
                t.a.iter()
                    .enumerate()
                    .map(|(k, a)| to_f64(a) * f64::powi(tt, 1 - 2 * k as i32))
                    .sum();
            let v = s * 2.0 * (0.5 / tt).sin();
            assert!((v - 1.0).abs() < 1e-12, "T = {tt}: {v}");
        }
    }

    #[test]
    fn json_layout() {
        let t = a_coeffs(2).unwrap();
        let j = t.to_json();
        assert_eq!(j["a"][1]["num"], json!(1));
        assert_eq!(j["a"][1]["den"], json!(24));
        assert_eq!(j["provenance"]["b0"], "exact");
        assert_eq!(j["provenance"]["b>0"], "fitted");
        let big = a_coeffs(20).unwrap().to_json().to_string();
        assert!(big.contains("\"den\":"));
    }

    #[test]
    fn tail_bound_is_small_at_cutoff() {
        for sigma in [0.01, 0.1, 1.0, 10.0] {
            assert!(tail_bound(sigma, cutoff(sigma)) < 1e-14, "sigma = {sigma}");
        }
    }

    #[test]
    fn large_sigma_matches_watson_term() {
        let r = l1(50.0, &QuadSpec::default()).unwrap();
        assert!((r.value - 0.042_527_203_203_458_12).abs() < 1e-12, "{r:?}");
        let lead = 0.042_652_705_828_009_79;
        assert!((r.value - lead).abs() < 0.05 * lead);
    }

    #[test]
    fn monotone_in_sigma() {
        let spec = QuadSpec::default();
        let v: Vec<f64> = [0.05, 0.2, 0.9, 1.1, 4.0]
            .iter()
            .map(|&s| l1(s, &spec).unwrap().value)
            .collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]), "{v:?}");
    }

    #[test]
    fn bar_is_smaller_and_consistent() {
        let spec = QuadSpec::with_tol(1e-12);
        for x in [0.3, 1.0, 2.0] {
            let full = l1(x, &spec).unwrap();
            let bar = l1_bar(x, &spec).unwrap();
            assert!(bar.value < full.value);
            let head = integrate(|y| z_squared(y) * (-x * y).exp(), 0.0, 1.0, &spec).unwrap();
            let diff = (full.value - head.value - bar.value).abs();
            assert!(
                diff <= full.abs_err + bar.abs_err + head.abs_err + 1e-12,
                "x = {x}: {diff}"
            );
        }
    }

    #[test]
    fn domain_checks() {
        let spec = QuadSpec::default();
        assert!(l1(0.0, &spec).unwrap_err().is_domain());
        assert!(kober_residual(5.0, &spec).unwrap_err().is_domain());
        assert!(fit_b(1, &[60.0, 70.0], &spec).unwrap_err().is_domain());
        assert!(fit_b(0, &[10.0, 60.0, 70.0], &spec).unwrap_err().is_domain());
    }
}
