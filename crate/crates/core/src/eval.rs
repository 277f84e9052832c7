use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A computed value together with an absolute error estimate and work counters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult<T> {
    pub value: T,
    pub abs_err: f64,
    /// Series or sum terms used.
    pub n_terms: u64,
    /// Underlying function evaluations consumed.
    pub n_evals: u64,
}

impl<T> EvalResult<T> {
    pub fn new(value: T, abs_err: f64) -> Self {
        EvalResult {
            value,
            abs_err,
            n_terms: 0,
            n_evals: 0,
        }
    }

    pub fn with_work(mut self, n_terms: u64, n_evals: u64) -> Self {
        self.n_terms = n_terms;
        self.n_evals = n_evals;
        self
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> EvalResult<U> {
        EvalResult {
            value: f(self.value),
            abs_err: self.abs_err,
            n_terms: self.n_terms,
            n_evals: self.n_evals,
        }
    }

    /// Adds `extra` to the error and merges the work counters of `other`.
    pub fn absorb<U>(mut self, other: &EvalResult<U>) -> Self {
        self.abs_err += other.abs_err;
        self.n_terms += other.n_terms;
        self.n_evals += other.n_evals;
        self
    }
}

impl EvalResult<f64> {
    pub fn is_within(&self, reference: f64, slack: f64) -> bool {
        (self.value - reference).abs() <= self.abs_err + slack
    }
}

impl EvalResult<Complex64> {
    pub fn conj(self) -> Self {
        self.map(|z| z.conj())
    }
}
