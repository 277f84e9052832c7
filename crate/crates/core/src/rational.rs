//! Exact rational series used for expansion coefficients.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const BERNOULLI_MAX: usize = 120;

fn bernoulli_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut b: Vec<BigRational> = Vec::with_capacity(BERNOULLI_MAX + 1);
        b.push(BigRational::one());
        for m in 1..=BERNOULLI_MAX {
            // sum_{k<m} C(m+1, k) B_k, with the binomial built incrementally
            let mut binom = BigInt::one();
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                acc += bk * BigRational::from_integer(binom.clone());
                binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b
    })
}

/// Bernoulli number B_n (B_1 = -1/2 convention), n <= 120.
pub fn bernoulli(n: usize) -> BigRational {
    assert!(n <= BERNOULLI_MAX, "Bernoulli index {n} beyond table");
    bernoulli_table()[n].clone()
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `B_{2k} / (2k)!` as f64 for k = 0..=kmax; these drive Euler-Maclaurin and Stirling.
pub fn bernoulli_over_factorial(kmax: usize) -> Vec<f64> {
    let mut fact = BigInt::one();
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        if k > 0 {
            fact *= BigInt::from(2 * k - 1) * BigInt::from(2 * k);
        }
        out.push(to_f64(&(bernoulli(2 * k) / BigRational::from_integer(fact.clone()))));
    }
    out
}

/// Multiplicative inverse of a power series with nonzero constant term, to `n` terms.
pub fn invert_series(coeffs: &[BigRational], n: usize) -> Vec<BigRational> {
    assert!(!coeffs.is_empty() && !coeffs[0].is_zero(), "series not invertible");
    let c0_inv = coeffs[0].recip();
    let mut inv: Vec<BigRational> = Vec::with_capacity(n);
    for k in 0..n {
        if k == 0 {
            inv.push(c0_inv.clone());
            continue;
        }
        let mut acc = BigRational::zero();
        for j in 1..=k.min(coeffs.len() - 1) {
            acc += &coeffs[j] * &inv[k - j];
        }
        inv.push(-acc * &c0_inv);
    }
    inv
}

/// Coefficients β_n of `u / sin u = Σ β_n u^{2n}`, n = 0..=nmax, by inverting
/// the series `sin(u)/u = Σ (-1)^k u^{2k} / (2k+1)!` (a series in `u²`).
pub fn u_over_sin_u(nmax: usize) -> Vec<BigRational> {
    let mut sinc = Vec::with_capacity(nmax + 1);
    let mut fact = BigInt::one();
    for k in 0..=nmax {
        if k > 0 {
            fact *= BigInt::from(2 * k) * BigInt::from(2 * k + 1);
        }
        let mag = BigRational::new(BigInt::one(), fact.clone());
        sinc.push(if k % 2 == 0 { mag } else { -mag });
    }
    invert_series(&sinc, nmax + 1)
}
