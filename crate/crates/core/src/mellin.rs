//! The modified Mellin transform
//!
//! ```text
//! Z1(s) = ∫_1^∞ Z(x)² x^(−s) dx,   s = σ + it,
//! ```
//!
//! with two evaluation methods over one integration engine:
//!
//! * `direct` (σ ≥ 1.2): ∫_1^X Z² x^(−s) plus the closed-form tail of the smooth
//!   part log(x/2π) + 2γ; the tail of (E − π)′ is bounded through |E| ≤ c_E x^(1/4+δ).
//! * `continued` (σ > 0.3): X is snapped to a zero of E, the integral is taken
//!   to a horizon Y ≥ X and the tail of (E − π)′ is integrated by parts twice,
//!
//! ```text
//! ∫_Y^∞ (E−π)′x^(−s) = −(E(Y)−π)Y^(−s) − sG(Y)Y^(−s−1) − s(s+1)G1(Y)Y^(−s−2)
//!                      + s(s+1)(s+2) ∫_Y^∞ G1(x) x^(−s−3) dx,
//! ```
//!
//!   the last integral being bounded with |G1| ≤ c_G1 x^(5/4). Between X and Y
//!   this is the same as integrating (E − π)x^(−s−1) numerically, so the value
//!   does not depend on which zero X was picked.
//!
//! The engine integrates Z² x^(−s) on [1, 128] from a precomputed table of
//! fresh Z² values on cells fine enough for |t| ≤ 256, and beyond 128 from the
//! shared Z² table, grouped into short log-intervals whose Taylor moments in
//! log x make each group cost a few dozen complex multiplications.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::laplace::l1_bar;
use crate::mean_square::{mean_square, EZeroCache, MeanSquare, CALIBRATION};
use crate::quadrature::{gk15_points, integrate, integrate_complex, QuadSpec, GK15_GAUSS, GK15_KRONROD};
use crate::samples::{Z2Data, CELL};
use crate::sum::ComplexNeumaier;
use crate::zeta::{hardy_z, log_gamma, z_squared, z_squared_err, ZetaOptions};
use crate::{EULER_GAMMA, LN_2PI};

/// Smallest σ accepted by [`z1_direct`].
pub const DIRECT_SIGMA_MIN: f64 = 1.2;

/// [`z1_continued`] needs σ strictly above this.
pub const CONTINUED_SIGMA_MIN: f64 = 0.3;

/// Smallest truncation point of [`z1_direct`].
pub const DIRECT_X_MIN: f64 = 100.0;

/// The ε of the window comparison column in scans.
pub const BOUND_EPS: f64 = 0.1;

/// Default h sequence of [`laurent_coeffs`].
pub const DEFAULT_H: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

pub const SCAN_HEADER: &str = "t,sigma,re,im,abs,abs_err,X_used,bound_13,bound_14";

const FINE_END: f64 = 128.0;
const FAST_S_MAX: f64 = 256.0;
const PHASE_STEP: f64 = 0.5;
const MOMENTS: usize = 24;
const GROUP_ERR_SAFETY: f64 = 4.0;
// |Z|² used to size the pointwise error of fresh partial cells
const Z2_ERR_REF: f64 = 100.0;

/// s = σ + it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPoint {
    pub sigma: f64,
    pub t: f64,
}

impl ComplexPoint {
    pub fn new(sigma: f64, t: f64) -> Self {
        ComplexPoint { sigma, t }
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }

    pub fn conj(&self) -> Self {
        ComplexPoint::new(self.sigma, -self.t)
    }

    fn check_finite(&self) -> Result<()> {
        if self.sigma.is_finite() && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("s = {} + {}i is not finite", self.sigma, self.t)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Continued,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Continued => "continued",
        }
    }

    /// Lower end of the σ range the method accepts.
    pub fn strip_floor(&self) -> f64 {
        match self {
            Method::Direct => DIRECT_SIGMA_MIN,
            Method::Continued => CONTINUED_SIGMA_MIN,
        }
    }
}

/// How the split point X of the continued method is targeted before it is
/// moved to a zero of E.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XPolicy {
    /// max(X_min, t^(16/7)).
    SixteenSevenths,
    /// X_min.
    Fixed,
    /// max(X_min, 2|t|).
    MinCost,
}

impl FromStr for XPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sixteen_sevenths" => Ok(XPolicy::SixteenSevenths),
            "fixed" => Ok(XPolicy::Fixed),
            "min_cost" => Ok(XPolicy::MinCost),
            _ => Err(Error::domain(format!(
                "unknown X policy {s:?} (expected sixteen_sevenths, fixed or min_cost)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Z1Config {
    pub x_policy: XPolicy,
    pub x_min: f64,
    /// Horizon Y = y_factor·X, capped at `y_max`.
    pub y_factor: f64,
    pub y_max: f64,
    /// Radius around s = 1 where evaluation is refused.
    pub exclusion_radius: f64,
    /// Multiplier C of the zero search interval [X, X + C√X].
    pub zero_c: f64,
    /// Target of [`direct_truncation`].
    pub direct_x: f64,
    /// 2 halves the fine near-range cells and the log-groups.
    pub resolution: u32,
    pub spec: QuadSpec,
    /// Directory of the E-zero CSV cache.
    pub cache_dir: Option<PathBuf>,
}

impl Default for Z1Config {
    fn default() -> Self {
        Z1Config {
            x_policy: XPolicy::MinCost,
            x_min: 100.0,
            y_factor: 1e3,
            y_max: 1e5,
            exclusion_radius: 1e-3,
            zero_c: 10.0,
            direct_x: 1e5,
            resolution: 1,
            spec: QuadSpec::with_tol(1e-10),
            cache_dir: None,
        }
    }
}

/// A value of Z1 with the method and split point that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Z1Value {
    pub s: ComplexPoint,
    pub value: EvalResult<Complex64>,
    pub method: Method,
    /// X of the direct truncation, or the E-zero X of the continued method.
    pub x_used: f64,
}

impl Z1Value {
    pub fn to_json(&self) -> Value {
        json!({
            "s": {"sigma": self.s.sigma, "t": self.s.t},
            "value": {"re": self.value.value.re, "im": self.value.value.im},
            "abs_err": self.value.abs_err,
            "method": self.method.as_str(),
            "X_used": self.x_used,
        })
    }
}

/// 1/(s−1)² + (2γ − log 2π)/(s−1).
pub fn laurent_model(s: Complex64) -> Complex64 {
    let w = s - 1.0;
    (w * w).inv() + (2.0 * EULER_GAMMA - LN_2PI) / w
}

/// ∫_X^∞ (log(x/2π) + 2γ) x^(−s) dx = X^(1−s)/(s−1)·(1/(s−1) + log X + 2γ − log 2π).
pub fn smooth_tail(s: Complex64, x: f64) -> Complex64 {
    let w = s - 1.0;
    let lx = x.ln();
    (-w * lx).exp() / w * (w.inv() + lx + 2.0 * EULER_GAMMA - LN_2PI)
}

#[inline]
fn x_pow_neg_s(l: f64, sigma: f64, t: f64) -> Complex64 {
    Complex64::from_polar((-sigma * l).exp(), -t * l)
}

// ---------------------------------------------------------------------------
// integration engine

struct FineCell {
    end: f64,
    l: [f64; 15],
    wk: [f64; 15],
    wg: [f64; 15],
    f_err: f64,
}

/// Fresh Z² on GK15 nodes of sub-cells of [1, 128] whose phase t·Δlog x stays
/// below PHASE_STEP/resolution for |t| ≤ 256.
struct FineTable {
    cells: Vec<FineCell>,
}

fn fine_table(resolution: u32) -> Arc<FineTable> {
    static TABLES: Mutex<Vec<(u32, Arc<FineTable>)>> = Mutex::new(Vec::new());
    let mut guard = TABLES.lock().unwrap();
    if let Some((_, t)) = guard.iter().find(|(r, _)| *r == resolution) {
        return t.clone();
    }
    let first = (1.0 / CELL) as usize;
    let last = (FINE_END / CELL) as usize;
    let bounds: Vec<(f64, f64)> = (first..last)
        .flat_map(|i| {
            let a = Z2Data::cell_start(i);
            let m = (FAST_S_MAX * CELL / (PHASE_STEP * a)).ceil().max(1.0) as usize * resolution as usize;
            (0..m).map(move |k| {
                let lo = a + CELL * k as f64 / m as f64;
                let hi = if k + 1 == m {
                    a + CELL
                } else {
                    a + CELL * (k + 1) as f64 / m as f64
                };
                (lo, hi)
            })
        })
        .collect();
    let cells = bounds
        .par_iter()
        .map(|&(a, b)| {
            let h = 0.5 * (b - a);
            let xs = gk15_points(a, b);
            let mut cell = FineCell {
                end: b,
                l: [0.0; 15],
                wk: [0.0; 15],
                wg: [0.0; 15],
                f_err: 0.0,
            };
            for j in 0..15 {
                let z2 = z_squared(xs[j]);
                cell.l[j] = xs[j].ln();
                cell.wk[j] = h * GK15_KRONROD[j] * z2;
                cell.wg[j] = h * GK15_GAUSS[j] * z2;
                cell.f_err += h * GK15_KRONROD[j] * z_squared_err(xs[j], z2);
            }
            cell
        })
        .collect();
    let table = Arc::new(FineTable { cells });
    guard.push((resolution, table.clone()));
    table
}

/// A run of table cells [first, last) short enough in log x for a Taylor
/// expansion of x^(−s) about its centre.
struct Group {
    first: usize,
    last: usize,
    x_lo: f64,
    /// log of the geometric centre
    lc: f64,
    /// max |log x − lc|
    delta: f64,
    /// m_k = Σ w Z² (log x − lc)^k / k!
    m: [f64; MOMENTS],
    /// Σ over cells of h|K − G| of Z² plus the pointwise error
    err: f64,
}

struct Engine {
    ms: Arc<MeanSquare>,
    fine: Arc<FineTable>,
    groups: Vec<Group>,
    group_s_max: f64,
}

fn cell_gap(data: &Z2Data, i: usize) -> (f64, f64) {
    let h = 0.5 * CELL;
    let a = Z2Data::cell_start(i);
    let z2 = data.nodes(i);
    let xs = gk15_points(a, a + CELL);
    let (mut d, mut fe) = (0.0, 0.0);
    for j in 0..15 {
        d += (GK15_KRONROD[j] - GK15_GAUSS[j]) * z2[j];
        fe += GK15_KRONROD[j] * z_squared_err(xs[j], z2[j]);
    }
    (h * d.abs(), h * fe)
}

fn build_groups(data: &Z2Data, resolution: u32) -> (Vec<Group>, f64) {
    let half_width = 1.0 / (128.0 * resolution as f64);
    let n = data.cells();
    let mut spans = Vec::new();
    let mut i = (FINE_END / CELL) as usize;
    loop {
        let lo = Z2Data::cell_start(i);
        let mut j = i + 1;
        while (Z2Data::cell_start(j + 1) / lo).ln() <= 2.0 * half_width {
            j += 1;
        }
        if j > n {
            break;
        }
        spans.push((i, j));
        i = j;
    }
    let groups = spans
        .into_par_iter()
        .map(|(first, last)| {
            let x_lo = Z2Data::cell_start(first);
            let x_hi = Z2Data::cell_start(last);
            let lc = 0.5 * (x_lo.ln() + x_hi.ln());
            let mut m = [0.0; MOMENTS];
            let mut err = 0.0;
            let h = 0.5 * CELL;
            for c in first..last {
                let a = Z2Data::cell_start(c);
                let xs = gk15_points(a, a + CELL);
                let z2 = data.nodes(c);
                for j in 0..15 {
                    let ell = xs[j].ln() - lc;
                    let mut p = h * GK15_KRONROD[j] * z2[j];
                    for (k, mk) in m.iter_mut().enumerate() {
                        *mk += p;
                        p *= ell / (k + 1) as f64;
                    }
                }
                let (gap, fe) = cell_gap(data, c);
                err += gap + fe;
            }
            Group {
                first,
                last,
                x_lo,
                lc,
                delta: (x_hi.ln() - lc).max(lc - x_lo.ln()),
                m,
                err,
            }
        })
        .collect();
    (groups, 2.0 / half_width)
}

fn engine(ms: Arc<MeanSquare>, resolution: u32) -> Arc<Engine> {
    static ENGINES: Mutex<Vec<(u32, Arc<Engine>)>> = Mutex::new(Vec::new());
    let mut guard = ENGINES.lock().unwrap();
    if let Some((_, e)) = guard
        .iter()
        .find(|(r, e)| *r == resolution && e.ms.cells() >= ms.cells())
    {
        return e.clone();
    }
    let fine = fine_table(resolution);
    let (groups, group_s_max) = build_groups(ms.data(), resolution);
    let e = Arc::new(Engine {
        ms,
        fine,
        groups,
        group_s_max,
    });
    guard.retain(|(r, _)| *r != resolution);
    guard.push((resolution, e.clone()));
    e
}

impl Engine {
    /// ∫_1^b Z(x)² x^(−s) dx.
    fn integral(&self, s: Complex64, b: f64, spec: &QuadSpec) -> Result<EvalResult<Complex64>> {
        let (sigma, t) = (s.re, s.im);
        let data = self.ms.data();
        let mut acc = ComplexNeumaier::new();
        let mut err = 0.0;
        let mut evals = 0u64;
        let mut x = 1.0;
        let fast = s.norm() <= FAST_S_MAX;
        if fast {
            for c in &self.fine.cells {
                if c.end > b {
                    break;
                }
                let (mut k, mut g) = (Complex64::default(), Complex64::default());
                for j in 0..15 {
                    let p = x_pow_neg_s(c.l[j], sigma, t);
                    k += p * c.wk[j];
                    g += p * c.wg[j];
                }
                acc.add(k);
                err += (k - g).norm() + c.f_err * (-sigma * c.l[0]).exp();
                evals += 15;
                x = c.end;
            }
        } else {
            let xa = ((2.0 * t.abs()).max(FINE_END) / CELL).ceil() * CELL;
            let end = xa.min(b);
            let r = integrate_complex(z_squared, sigma, t, 1.0, end, spec)?;
            acc.add(r.value);
            err += r.abs_err + (end - 1.0) * z_squared_err(end, Z2_ERR_REF);
            evals += r.n_evals;
            x = end;
        }
        let mut cell = (x / CELL).round() as usize;
        if fast && s.norm() <= self.group_s_max {
            let start = self.groups.partition_point(|g| g.first < cell);
            for g in &self.groups[start..] {
                if Z2Data::cell_start(g.last) > b {
                    break;
                }
                let z = -s;
                let mut p = Complex64::new(g.m[MOMENTS - 1], 0.0);
                for k in (0..MOMENTS - 1).rev() {
                    p = p * z + g.m[k];
                }
                acc.add(p * (-s * g.lc).exp());
                let sd = s.norm() * g.delta;
                let mut taylor = 1.0;
                for k in 1..=MOMENTS {
                    taylor *= sd / k as f64;
                }
                let scale = (-sigma * g.x_lo.ln()).exp();
                err += scale * (GROUP_ERR_SAFETY * g.err + g.m[0] * sd.exp() * (taylor + 64.0 * f64::EPSILON));
                evals += 1;
                cell = g.last;
            }
        }
        let h = 0.5 * CELL;
        while cell < data.cells() && Z2Data::cell_start(cell + 1) <= b {
            let a = Z2Data::cell_start(cell);
            let xs = gk15_points(a, a + CELL);
            let z2 = data.nodes(cell);
            let (mut k, mut g) = (Complex64::default(), Complex64::default());
            for j in 0..15 {
                let p = x_pow_neg_s(xs[j].ln(), sigma, t) * z2[j];
                k += p * GK15_KRONROD[j];
                g += p * GK15_GAUSS[j];
            }
            let (gap, fe) = cell_gap(data, cell);
            acc.add(k * h);
            err += h * (k - g).norm() + (gap + fe) * (-sigma * a.ln()).exp();
            evals += 15;
            cell += 1;
        }
        x = x.max(Z2Data::cell_start(cell));
        if b > x {
            let r = integrate_complex(z_squared, sigma, t, x, b, spec)?;
            acc.add(r.value);
            err += r.abs_err + (b - x) * z_squared_err(b, Z2_ERR_REF) * (-sigma * x.ln()).exp();
            evals += r.n_evals;
        }
        let v = acc.total();
        Ok(EvalResult::new(v, err + 8.0 * f64::EPSILON * v.norm()).with_work(cell as u64, evals))
    }
}

/// ∫_1^b Z(x)² x^(−s) dx through the tabulated engine.
pub fn partial_integral(p: ComplexPoint, b: f64, cfg: &Z1Config) -> Result<EvalResult<Complex64>> {
    p.check_finite()?;
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::domain(format!("upper limit {b} must exceed 1")));
    }
    let ms = mean_square(b)?;
    engine(ms, cfg.resolution).integral(p.s(), b, &cfg.spec)
}

// ---------------------------------------------------------------------------
// direct and continued evaluation

/// Bound on |∫_X^∞ (E−π)′ x^(−s) dx| from |E(x)| ≤ c_E x^(1/4+δ).
pub fn e_tail_bound(p: ComplexPoint, x: f64) -> f64 {
    let a = 0.25 + CALIBRATION.delta_e;
    let c = CALIBRATION.c_e;
    let sigma = p.sigma;
    let xs = x.powf(-sigma);
    (c * x.powf(a) + PI) * xs + p.s().norm() * (c * x.powf(a - sigma) / (sigma - a) + PI * xs / sigma)
}

/// Z1(s) = ∫_1^X Z² x^(−s) + smooth tail, for σ ≥ 1.2 and X ≥ 100.
pub fn z1_direct(p: ComplexPoint, x: f64, spec: &QuadSpec) -> Result<Z1Value> {
    p.check_finite()?;
    if !(p.sigma >= DIRECT_SIGMA_MIN) {
        return Err(Error::Strip {
            sigma: p.sigma,
            floor: DIRECT_SIGMA_MIN,
            method: "direct",
        });
    }
    if !(x >= DIRECT_X_MIN && x.is_finite()) {
        return Err(Error::domain(format!(
            "direct truncation X = {x} must be at least {DIRECT_X_MIN}"
        )));
    }
    let s = p.s();
    let cfg = Z1Config {
        spec: *spec,
        ..Z1Config::default()
    };
    let head = partial_integral(p, x, &cfg)?;
    let tail = smooth_tail(s, x);
    let v = head.value + tail;
    let err = head.abs_err + e_tail_bound(p, x) + 4.0 * f64::EPSILON * tail.norm();
    Ok(Z1Value {
        s: p,
        value: EvalResult::new(v, err).with_work(head.n_terms, head.n_evals),
        method: Method::Direct,
        x_used: x,
    })
}

fn x_target(p: ComplexPoint, cfg: &Z1Config) -> f64 {
    let t = p.t.abs();
    match cfg.x_policy {
        XPolicy::SixteenSevenths => cfg.x_min.max(t.powf(16.0 / 7.0)),
        XPolicy::Fixed => cfg.x_min,
        XPolicy::MinCost => cfg.x_min.max(2.0 * t),
    }
}

/// A zero of E in [target, target + C√target], memoised in-process and, when
/// a cache directory is configured, in its CSV.
fn snap_to_e_zero(target: f64, cfg: &Z1Config) -> Result<f64> {
    static MEMO: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    static LOADED: Mutex<Vec<PathBuf>> = Mutex::new(Vec::new());
    static WRITER: Mutex<()> = Mutex::new(());
    let key = (target.to_bits(), cfg.zero_c.to_bits());
    let memo = MEMO.get_or_init(Default::default);
    if let Some(dir) = &cfg.cache_dir {
        let mut loaded = LOADED.lock().unwrap();
        if !loaded.contains(dir) {
            let rows = EZeroCache::new(dir).load()?;
            let mut m = memo.lock().unwrap();
            for r in rows {
                m.entry((r[0].to_bits(), r[1].to_bits())).or_insert(r[2]);
            }
            loaded.push(dir.clone());
        }
    }
    if let Some(&x) = memo.lock().unwrap().get(&key) {
        return Ok(x);
    }
    let ms = mean_square(target + cfg.zero_c * target.sqrt())?;
    let rec = ms.find_e_zero(target, cfg.zero_c)?;
    if let Some(dir) = &cfg.cache_dir {
        let _w = WRITER.lock().unwrap();
        EZeroCache::new(dir).append(&rec)?;
    }
    memo.lock().unwrap().insert(key, rec.x_star);
    Ok(rec.x_star)
}

/// Z1(s) for σ > 0.3 through a zero X of E and integration by parts at Y.
pub fn z1_continued(p: ComplexPoint, cfg: &Z1Config) -> Result<Z1Value> {
    p.check_finite()?;
    if !(p.sigma > CONTINUED_SIGMA_MIN) {
        return Err(Error::Strip {
            sigma: p.sigma,
            floor: CONTINUED_SIGMA_MIN,
            method: "continued",
        });
    }
    let s = p.s();
    if (s - 1.0).norm() <= cfg.exclusion_radius {
        return Err(Error::PoleProximity {
            sigma: p.sigma,
            t: p.t,
            radius: cfg.exclusion_radius,
        });
    }
    let x = snap_to_e_zero(x_target(p, cfg), cfg)?;
    let y_target = (cfg.y_factor * x).min(cfg.y_max).max(x);
    let ms = mean_square(y_target)?;
    let iy = (y_target / CELL).floor() as usize;
    let y = Z2Data::cell_start(iy);
    let eng = engine(ms.clone(), cfg.resolution);
    let head = eng.integral(s, y, &cfg.spec)?;
    let ly = y.ln();
    let ys = (-s * ly).exp();
    let (e, g, g1) = (ms.e_node(iy), ms.g_node(iy), ms.g1_node(iy));
    let s1 = s + 1.0;
    let boundary = -(e.value - PI) * ys - s * g.value * ys / y - s * s1 * g1.value * ys / (y * y);
    let tail = smooth_tail(s, y);
    let v = head.value + tail + boundary;
    let sigma = p.sigma;
    let yp = ys.norm();
    let remainder = (s * s1 * (s + 2.0)).norm() * CALIBRATION.c_g1 * y.powf(-sigma - 0.75) / (sigma + 0.75);
    let err = head.abs_err
        + e.abs_err * yp
        + s.norm() * g.abs_err * yp / y
        + (s * s1).norm() * g1.abs_err * yp / (y * y)
        + remainder
        + 8.0 * f64::EPSILON * (tail.norm() + boundary.norm());
    Ok(Z1Value {
        s: p,
        value: EvalResult::new(v, err).with_work(head.n_terms, head.n_evals),
        method: Method::Continued,
        x_used: x,
    })
}

/// Truncation point for automatic use of the direct method: a solution of
/// E(X) = π in [direct_x, direct_x + C√direct_x], where the boundary term
/// (E(X) − π)X^(−s) of the neglected tail vanishes.
pub fn direct_truncation(cfg: &Z1Config) -> Result<f64> {
    static MEMO: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    let key = (cfg.direct_x.to_bits(), cfg.zero_c.to_bits());
    let memo = MEMO.get_or_init(Default::default);
    if let Some(&x) = memo.lock().unwrap().get(&key) {
        return Ok(x);
    }
    let x0 = cfg.direct_x;
    if !(x0 >= DIRECT_X_MIN) {
        return Err(Error::domain(format!(
            "direct truncation X = {x0} must be at least {DIRECT_X_MIN}"
        )));
    }
    let ms = mean_square(x0 + cfg.zero_c * x0.sqrt())?;
    let x = ms.find_e_level(x0, cfg.zero_c, PI)?.x_star;
    memo.lock().unwrap().insert(key, x);
    Ok(x)
}

/// Direct method when σ ≥ 1.2, continued otherwise.
pub fn z1(p: ComplexPoint, cfg: &Z1Config) -> Result<Z1Value> {
    if p.sigma >= DIRECT_SIGMA_MIN {
        z1_direct(p, direct_truncation(cfg)?, &cfg.spec)
    } else {
        z1_continued(p, cfg)
    }
}

// ---------------------------------------------------------------------------
// Laurent coefficients at s = 1

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentFit {
    pub h: Vec<f64>,
    /// h²·Z1(1 + h)
    pub phi: Vec<EvalResult<f64>>,
    pub c0: EvalResult<f64>,
    pub c1: EvalResult<f64>,
    /// |c0 − c0 without the largest h|
    pub c0_extrap: f64,
    pub c1_extrap: f64,
}

/// Monomial coefficients of the interpolating polynomial, as a matrix whose
/// row k maps the data to coefficient k.
fn interpolation_weights(h: &[f64]) -> Result<DMatrix<f64>> {
    let n = h.len();
    let v = DMatrix::from_fn(n, n, |i, j| h[i].powi(j as i32));
    v.try_inverse()
        .ok_or_else(|| Error::domain("interpolation nodes must be distinct"))
}

fn extrapolate(h: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let w = interpolation_weights(h)?;
    let c = &w * DVector::from_column_slice(y);
    Ok((c[0], if h.len() > 1 { c[1] } else { 0.0 }))
}

/// c0, c1 of h²Z1(1+h) = c0 + c1 h + O(h²) by polynomial extrapolation to h = 0.
pub fn laurent_coeffs(h_list: &[f64], cfg: &Z1Config) -> Result<LaurentFit> {
    if h_list.len() < 3 {
        return Err(Error::domain("laurent_coeffs needs at least three h values"));
    }
    if h_list.windows(2).any(|w| !(w[0] > w[1])) || h_list.iter().any(|&h| !(h >= 0.05 && h.is_finite())) {
        return Err(Error::domain("h values must be strictly decreasing and at least 0.05"));
    }
    let phi = h_list
        .iter()
        .map(|&h| {
            let p = ComplexPoint::new(1.0 + h, 0.0);
            let z = if h >= 0.2 {
                z1_direct(p, direct_truncation(cfg)?, &cfg.spec)?
            } else {
                z1_continued(p, cfg)?
            };
            Ok(EvalResult::new(h * h * z.value.value.re, h * h * z.value.abs_err))
        })
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = phi.iter().map(|r| r.value).collect();
    let w = interpolation_weights(h_list)?;
    let c = &w * DVector::from_column_slice(&y);
    let prop = |k: usize| (0..h_list.len()).map(|i| w[(k, i)].abs() * phi[i].abs_err).sum::<f64>();
    let (s0, s1) = extrapolate(&h_list[1..], &y[1..])?;
    let c0_extrap = (c[0] - s0).abs();
    let c1_extrap = (c[1] - s1).abs();
    Ok(LaurentFit {
        h: h_list.to_vec(),
        c0: EvalResult::new(c[0], prop(0) + c0_extrap),
        c1: EvalResult::new(c[1], prop(1) + c1_extrap),
        phi,
        c0_extrap,
        c1_extrap,
    })
}

// ---------------------------------------------------------------------------
// h_m and the Γ-bridge

/// h_m = ∫_0^1 Z(y)² y^m dy, evaluated with Euler–Maclaurin values of Z.
pub fn h_m(m: u32, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    if m > 40 {
        return Err(Error::domain(format!("h_m supports m <= 40 (got {m})")));
    }
    let opts = ZetaOptions::euler_maclaurin();
    let mut zerr = 0.0f64;
    let r = integrate(
        |y| match hardy_z(y, &opts) {
            Ok(z) => {
                zerr = zerr.max(z.abs_err * (2.0 * z.value.abs() + z.abs_err));
                z.value * z.value * y.powi(m as i32)
            }
            Err(_) => f64::NAN,
        },
        0.0,
        1.0,
        spec,
    )?;
    if !r.value.is_finite() {
        return Err(Error::domain("Z could not be evaluated on [0, 1]"));
    }
    Ok(EvalResult::new(r.value, r.abs_err + zerr).with_work(r.n_terms, r.n_evals))
}

/// Both sides of Z1(s)Γ(s) = ∫_0^∞ L̄1(x) x^(s−1) dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeCheck {
    pub lhs: EvalResult<Complex64>,
    pub rhs: EvalResult<Complex64>,
    /// |lhs − rhs| / |lhs|
    pub rel: EvalResult<f64>,
}

const BRIDGE_X_LO: f64 = 1e-3;
const BRIDGE_X_HI: f64 = 50.0;

/// ∫_0^{x_lo} L̄1(x) x^(s−1) dx from L̄1(x) = (γ − log 2πx)/(2 sin(x/2)) + π − h_0 + O(x).
fn bridge_head(s: Complex64, x_lo: f64, spec: &QuadSpec) -> Result<EvalResult<Complex64>> {
    let h0 = h_m(0, spec)?;
    let c = EULER_GAMMA - LN_2PI;
    let l = x_lo.ln();
    let pw = |a: Complex64| (a * l).exp();
    let sm1 = s - 1.0;
    let sp1 = s + 1.0;
    let lead = pw(sm1) * ((c - l) / sm1 + (sm1 * sm1).inv());
    let second = pw(sp1) * ((c - l) / sp1 + (sp1 * sp1).inv()) / 24.0;
    let konst = pw(s) * (PI - h0.value) / s;
    let sigma = s.re;
    // the O(x) coefficient d_1 + h_1 is about −0.2; 2 bounds it with margin
    let rest = 2.0 * x_lo.powf(sigma + 1.0) / (sigma + 1.0);
    let err = rest + h0.abs_err * x_lo.powf(sigma) / sigma;
    Ok(EvalResult::new(lead + second + konst, err))
}

fn bridge_body(s: Complex64, spec: &QuadSpec) -> Result<EvalResult<Complex64>> {
    let (u0, u1) = (BRIDGE_X_LO.ln(), BRIDGE_X_HI.ln());
    let mut panels = 16usize;
    let mut evals = 0u64;
    loop {
        let w = (u1 - u0) / panels as f64;
        let nodes: Vec<(usize, f64)> = (0..panels)
            .flat_map(|p| {
                let a = u0 + w * p as f64;
                gk15_points(a, a + w).into_iter().enumerate().collect::<Vec<_>>()
            })
            .collect();
        let vals = nodes
            .par_iter()
            .map(|&(_, u)| l1_bar(u.exp(), spec))
            .collect::<Result<Vec<_>>>()?;
        evals += vals.len() as u64;
        let mut acc = ComplexNeumaier::new();
        let (mut qerr, mut ferr) = (0.0, 0.0);
        for p in 0..panels {
            let (mut k, mut g) = (Complex64::default(), Complex64::default());
            for j in 0..15 {
                let (_, u) = nodes[15 * p + j];
                let e = (s * u).exp();
                let v = vals[15 * p + j];
                k += e * (GK15_KRONROD[j] * v.value);
                g += e * (GK15_GAUSS[j] * v.value);
                ferr += 0.5 * w * GK15_KRONROD[j] * v.abs_err * e.norm();
            }
            acc.add(0.5 * w * k);
            qerr += 0.5 * w * (k - g).norm();
        }
        let v = acc.total();
        let res = EvalResult::new(v, qerr + ferr + 8.0 * f64::EPSILON * v.norm()).with_work(panels as u64, evals);
        if qerr <= spec.tolerance(v.norm()) {
            return Ok(res);
        }
        if panels >= 256 {
            return Err(Error::ConvergenceComplex { best: res });
        }
        panels *= 2;
    }
}

fn bridge_tail(s: Complex64, spec: &QuadSpec) -> Result<f64> {
    let sigma = s.re;
    let l = l1_bar(BRIDGE_X_HI, spec)?;
    Ok((l.value + l.abs_err) * BRIDGE_X_HI.powf(sigma - 1.0) / (1.0 - (sigma - 1.0) / BRIDGE_X_HI))
}

/// LHS = Z1(s)Γ(s) by the direct method, RHS = ∫_0^∞ L̄1(x) x^(s−1) dx with
/// the pieces below 1e-3 and above 50 handled analytically.
pub fn gamma_bridge(p: ComplexPoint, spec: &QuadSpec) -> Result<BridgeCheck> {
    p.check_finite()?;
    if !(1.2..=3.0).contains(&p.sigma) || p.t.abs() > 5.0 {
        return Err(Error::domain(format!(
            "gamma bridge check needs 1.2 <= sigma <= 3 and |t| <= 5 (got {} + {}i)",
            p.sigma, p.t
        )));
    }
    let s = p.s();
    let z = z1_direct(p, direct_truncation(&Z1Config::default())?, spec)?.value;
    let lg = log_gamma(s)?;
    let gamma = lg.value.exp();
    let lhs_v = z.value * gamma;
    let lhs = EvalResult::new(lhs_v, gamma.norm() * z.abs_err + lhs_v.norm() * lg.abs_err);
    let head = bridge_head(s, BRIDGE_X_LO, spec)?;
    let body = bridge_body(s, spec)?;
    let tail = bridge_tail(s, spec)?;
    let rhs = EvalResult::new(head.value + body.value, head.abs_err + body.abs_err + tail)
        .with_work(body.n_terms, body.n_evals);
    let m = lhs.value.norm();
    let rel = EvalResult::new((lhs.value - rhs.value).norm() / m, (lhs.abs_err + rhs.abs_err) / m);
    Ok(BridgeCheck { lhs, rhs, rel })
}

/// |LHS − RHS| / |LHS| of the Γ-bridge identity.
pub fn gamma_bridge_check(p: ComplexPoint, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    Ok(gamma_bridge(p, spec)?.rel)
}

// ---------------------------------------------------------------------------
// scans

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub t: f64,
    pub sigma: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub abs_err: f64,
    pub x_used: f64,
    /// t^(1/2−σ+ε)·max over the window of |Z1(1/2 + iv)|
    pub bound_13: f64,
    /// t^(5/6−σ)
    pub bound_14: f64,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t, self.sigma, self.re, self.im, self.abs, self.abs_err, self.x_used, self.bound_13, self.bound_14
        )
    }
}

pub fn write_scan_csv(rows: &[ScanRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{SCAN_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// t0, t0 + dt, ... up to t1 inclusive (with a small tolerance for rounding).
pub fn scan_points(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t0.is_finite() && t1.is_finite() && dt > 0.0 && dt.is_finite() && t1 > t0) {
        return Err(Error::domain(format!(
            "scan needs t0 < t1 and dt > 0 (got {t0}, {t1}, {dt})"
        )));
    }
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 * dt).collect())
}

const GOLDEN_STEPS: usize = 16;

/// max |Z1(1/2 + iv)| over 41 equally spaced v in [t − t^ε, t + t^ε] (the
/// centre included), refined by golden-section search around the best point.
pub fn window_max(t: f64, eps: f64, cfg: &Z1Config) -> Result<EvalResult<f64>> {
    if !(t >= 10.0 && t.is_finite()) || !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!(
            "window_max needs t >= 10 and 0 < eps <= 0.5 (got {t}, {eps})"
        )));
    }
    let f = |v: f64| z1_continued(ComplexPoint::new(0.5, v), cfg).map(|z| z.value.map(|c| c.norm()));
    let r = t.powf(eps);
    let grid: Vec<f64> = (0..=40).map(|k| t - r + 2.0 * r * k as f64 / 40.0).collect();
    let vals = grid.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
    let k = (0..vals.len()).fold(0, |b, i| if vals[i].value > vals[b].value { i } else { b });
    let mut best = vals[k];
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_STEPS {
        for cand in [fc, fd] {
            if cand.value > best.value {
                best = cand;
            }
        }
        if fc.value > fd.value {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    for cand in [fc, fd] {
        if cand.value > best.value {
            best = cand;
        }
    }
    Ok(best.with_work(0, (41 + GOLDEN_STEPS + 2) as u64))
}

fn scan_row(sigma: f64, t: f64, cfg: &Z1Config) -> ScanRow {
    let mut row = ScanRow {
        t,
        sigma,
        re: f64::NAN,
        im: f64::NAN,
        abs: f64::NAN,
        abs_err: f64::NAN,
        x_used: f64::NAN,
        bound_13: f64::NAN,
        bound_14: t.powf(5.0 / 6.0 - sigma),
        error: None,
    };
    match z1(ComplexPoint::new(sigma, t), cfg) {
        Ok(z) => {
            row.re = z.value.value.re;
            row.im = z.value.value.im;
            row.abs = row.re.hypot(row.im);
            row.abs_err = z.value.abs_err;
            row.x_used = z.x_used;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if t >= 10.0 {
        match window_max(t, BOUND_EPS, cfg) {
            Ok(w) => row.bound_13 = t.powf(0.5 - sigma + BOUND_EPS) * w.value,
            Err(e) => {
                row.error.get_or_insert(e.to_string());
            }
        }
    }
    row
}

/// Rows at the given ordinates, sorted by t.
pub fn scan_rows(sigma: f64, ts: &[f64], cfg: &Z1Config) -> Result<Vec<ScanRow>> {
    if !(sigma > CONTINUED_SIGMA_MIN && sigma <= 1.5) {
        return Err(Error::domain(format!("scan needs 0.3 < sigma <= 1.5 (got {sigma})")));
    }
    if ts.iter().any(|&t| !(t >= 2.0 && t.is_finite())) {
        return Err(Error::domain("scan ordinates must be at least 2"));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(f64::total_cmp);
    Ok(ts.par_iter().map(|&t| scan_row(sigma, t, cfg)).collect())
}

/// Z1(σ + it) and the comparison bounds along t = t0, t0 + dt, ..., t1.
pub fn scan_line(sigma: f64, t0: f64, t1: f64, dt: f64, cfg: &Z1Config) -> Result<Vec<ScanRow>> {
    if !(t0 >= 2.0) {
        return Err(Error::domain(format!("scan needs t0 >= 2 (got {t0})")));
    }
    scan_rows(sigma, &scan_points(t0, t1, dt)?, cfg)
}
