use num_complex::Complex64;
use thiserror::Error;

use crate::eval::EvalResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pole of the gamma function at s = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("Riemann-Siegel correction order {order} cannot reach {target:e} at t = {t} (bound {bound:e})")]
    Accuracy {
        t: f64,
        order: usize,
        bound: f64,
        target: f64,
    },

    #[error("capacity exceeded: requested {requested}, limit {limit}")]
    Capacity { requested: u64, limit: u64 },

    #[error("quadrature did not converge: estimate {} with error {:e}", best.value, best.abs_err)]
    Convergence { best: EvalResult<f64> },

    #[error("complex quadrature did not converge: estimate {} with error {:e}", best.value, best.abs_err)]
    ConvergenceComplex { best: EvalResult<Complex64> },

    #[error("grid covers [0, {covered}] but {requested} was requested")]
    GridCoverage { covered: f64, requested: f64 },

    #[error("no sign change of E in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("least-squares design is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("sigma = {sigma} is outside the validity strip of the {method} method (needs sigma >= {floor})")]
    Strip {
        sigma: f64,
        floor: f64,
        method: &'static str,
    },

    #[error("s = {sigma} + {t}i lies within {radius} of the pole at s = 1")]
    PoleProximity { sigma: f64, t: f64, radius: f64 },

    #[error("malformed cache file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the caller's arguments rather than by the numerics.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. }
                | Error::Domain(_)
                | Error::Strip { .. }
                | Error::PoleProximity { .. }
                | Error::Capacity { .. }
                | Error::GridCoverage { .. }
        )
    }

    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::ConvergenceComplex { .. })
    }
}
