//! The mean-square error term E(T), its integrals G(T) and G1(T), and the
//! explicit and series formulas for G(T).
//!
//! ```text
//! E(T)  = ∫_0^T Z(t)² dt − T(log(T/2π) + 2γ − 1)
//! G(T)  = ∫_0^T E(t) dt − πT
//! G1(T) = ∫_0^T G(t) dt
//! ```
//!
//! E, G and G1 are tabulated at the cell boundaries of the shared Z² table.
//! Each cell contributes local moments of E′(t) = Z(t)² − log(t/2π) − 2γ, so
//! G and G1 never go through the cancellation of ∫E against πT.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::arith::DivisorTable;
use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::quadrature::{gk15_points, GK15_GAUSS, GK15_KRONROD, GK15_NODES};
use crate::samples::{store, Z2Data, CELL};
use crate::sum::Neumaier;
use crate::zeta::{z_squared, z_squared_err};
use crate::{EULER_GAMMA, LN_2PI};

/// T(log(T/2π) + 2γ − 1), with the limit 0 at T = 0.
pub fn main_term(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t * (t.ln() - LN_2PI + 2.0 * EULER_GAMMA - 1.0)
}

/// Constants of the empirical bounds used for tails and remainders.
///
/// Each was measured on the tabulated range x ∈ [10, 10⁵] and rounded up
/// with a safety margin (measured maxima: 5.84, 2.28, 0.53, 0.25, 0.17).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// |E(x)| ≤ c_e · x^(1/4 + delta_e)
    pub c_e: f64,
    pub delta_e: f64,
    /// |G(x)| ≤ c_g · x^(3/4)
    pub c_g: f64,
    /// |G1(x)| ≤ c_g1 · x^(5/4)
    pub c_g1: f64,
    /// |G − (S1 − S2)| ≤ c_rem · T^(1/4)
    pub c_rem: f64,
    /// |G − truncated series| ≤ c_series · T^(2/3) log T
    pub c_series: f64,
}

pub const CALIBRATION: Calibration = Calibration {
    c_e: 8.0,
    delta_e: 0.1,
    c_g: 3.0,
    c_g1: 1.0,
    c_rem: 1.0,
    c_series: 0.5,
};

/// ∫_a^b (b−t)^k/k! · log t dt for k = 0, 1, 2.
fn log_moments(a: f64, b: f64) -> [f64; 3] {
    if a < 4.0 {
        // closed forms; the endpoint values stay small here
        let f1 = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() - t };
        let f2 = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                0.5 * t * t * t.ln() - 0.25 * t * t
            }
        };
        let f3 = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                t * t * t * t.ln() / 3.0 - t * t * t / 9.0
            }
        };
        let m0 = f1(b) - f1(a);
        let p1 = f2(b) - f2(a);
        let p2 = f3(b) - f3(a);
        let m1 = b * m0 - p1;
        let m2 = 0.5 * b * b * m0 - b * p1 + 0.5 * p2;
        return [m0, m1, m2];
    }
    let h = 0.5 * (b - a);
    let mut m = [0.0; 3];
    for (j, x) in gk15_points(a, b).into_iter().enumerate() {
        let w = GK15_KRONROD[j] * h * x.ln();
        let u = b - x;
        m[0] += w;
        m[1] += w * u;
        m[2] += w * 0.5 * u * u;
    }
    m
}

/// ∫_a^b (b−t)^k/k! · E′(t) dt for k = 0, 1, 2 given Z² at the GK15 nodes of [a, b],
/// with an error estimate for each.
fn e_prime_moments(a: f64, b: f64, z2: &[f64]) -> ([f64; 3], [f64; 3]) {
    let h = 0.5 * (b - a);
    let mut k = [0.0; 3];
    let mut g = [0.0; 3];
    let mut f_err = 0.0;
    for j in 0..15 {
        let x = a + h * (1.0 + GK15_NODES[j]);
        let u = b - x;
        let v = [z2[j], z2[j] * u, z2[j] * 0.5 * u * u];
        for r in 0..3 {
            k[r] += GK15_KRONROD[j] * v[r];
            g[r] += GK15_GAUSS[j] * v[r];
        }
        f_err += GK15_KRONROD[j] * z_squared_err(x, z2[j]);
    }
    let lm = log_moments(a, b);
    let w = b - a;
    let smooth = [w, 0.5 * w * w, w * w * w / 6.0];
    let c = LN_2PI - 2.0 * EULER_GAMMA;
    let mut val = [0.0; 3];
    let mut err = [0.0; 3];
    let pow = [1.0, w, 0.5 * w * w];
    for r in 0..3 {
        val[r] = h * k[r] - lm[r] + c * smooth[r];
        err[r] = h * (k[r] - g[r]).abs() + pow[r] * h * f_err + 8.0 * f64::EPSILON * (h * k[r].abs() + lm[r].abs());
    }
    (val, err)
}

/// E, G and G1 tabulated on the cell boundaries of the Z² table.
#[derive(Debug)]
pub struct MeanSquare {
    data: Arc<Z2Data>,
    e: Vec<f64>,
    e_err: Vec<f64>,
    g: Vec<f64>,
    g_err: Vec<f64>,
    g1: Vec<f64>,
    g1_err: Vec<f64>,
}

impl MeanSquare {
    pub fn from_data(data: Arc<Z2Data>) -> Self {
        let n = data.cells();
        let mut e = Vec::with_capacity(n + 1);
        let mut e_err = Vec::with_capacity(n + 1);
        let mut g = Vec::with_capacity(n + 1);
        let mut g_err = Vec::with_capacity(n + 1);
        let mut g1 = Vec::with_capacity(n + 1);
        let mut g1_err = Vec::with_capacity(n + 1);
        e.push(0.0);
        e_err.push(0.0);
        g.push(0.0);
        g_err.push(0.0);
        g1.push(0.0);
        g1_err.push(0.0);
        let mut prefix = Neumaier::default();
        let mut gs = Neumaier::default();
        let mut g1s = Neumaier::default();
        let (mut pe, mut ge, mut g1e) = (0.0, 0.0, 0.0);
        let h = CELL;
        for i in 0..n {
            let a = Z2Data::cell_start(i);
            let b = Z2Data::cell_start(i + 1);
            let (m, me) = e_prime_moments(a, b, data.nodes(i));
            let (ei, gi) = (e[i], gs.total());
            gs.add(h * (ei - PI));
            gs.add(m[1]);
            g1s.add(h * gi);
            g1s.add(0.5 * h * h * (ei - PI));
            g1s.add(m[2]);
            prefix.add(data.cell_int[i]);
            pe += data.cell_err[i];
            let e_next = prefix.total() - main_term(b);
            ge += h * e_err[i] + me[1];
            g1e += h * g_err[i] + 0.5 * h * h * e_err[i] + me[2];
            e.push(e_next);
            e_err.push(pe + 4.0 * f64::EPSILON * prefix.total().abs());
            g.push(gs.total());
            g_err.push(ge);
            g1.push(g1s.total());
            g1_err.push(g1e);
        }
        MeanSquare {
            data,
            e,
            e_err,
            g,
            g_err,
            g1,
            g1_err,
        }
    }

    pub fn x_end(&self) -> f64 {
        self.data.x_end()
    }

    pub fn data(&self) -> &Arc<Z2Data> {
        &self.data
    }

    /// Number of tabulated cell boundaries minus one.
    pub fn cells(&self) -> usize {
        self.data.cells()
    }

    /// E at the cell boundary i·CELL.
    pub fn e_node(&self, i: usize) -> EvalResult<f64> {
        EvalResult::new(self.e[i], self.e_err[i])
    }

    pub fn g_node(&self, i: usize) -> EvalResult<f64> {
        EvalResult::new(self.g[i], self.g_err[i])
    }

    pub fn g1_node(&self, i: usize) -> EvalResult<f64> {
        EvalResult::new(self.g1[i], self.g1_err[i])
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0) || t > self.x_end() {
            return Err(Error::GridCoverage {
                covered: self.x_end(),
                requested: t,
            });
        }
        let i = ((t / CELL).floor() as usize).min(self.cells());
        Ok((i, Z2Data::cell_start(i)))
    }

    /// E′ moments over [a, t] from fresh evaluations of Z².
    fn partial(&self, a: f64, t: f64) -> ([f64; 3], [f64; 3]) {
        let z2 = gk15_points(a, t).map(z_squared);
        e_prime_moments(a, t, &z2)
    }

    /// E(T) = ∫_0^T Z² − main_term(T).
    pub fn e(&self, t: f64) -> Result<EvalResult<f64>> {
        let (i, a) = self.locate(t)?;
        if t == a {
            return Ok(self.e_node(i));
        }
        let (m, me) = self.partial(a, t);
        Ok(EvalResult::new(self.e[i] + m[0], self.e_err[i] + me[0]).with_work(i as u64 + 1, 15))
    }

    /// G(T) = ∫_0^T E − πT.
    pub fn g(&self, t: f64) -> Result<EvalResult<f64>> {
        let (i, a) = self.locate(t)?;
        if t == a {
            return Ok(self.g_node(i));
        }
        let d = t - a;
        let (m, me) = self.partial(a, t);
        let v = self.g[i] + d * (self.e[i] - PI) + m[1];
        let err = self.g_err[i] + d * self.e_err[i] + me[1];
        Ok(EvalResult::new(v, err).with_work(i as u64 + 1, 15))
    }

    /// G1(T) = ∫_0^T G.
    pub fn g1(&self, t: f64) -> Result<EvalResult<f64>> {
        let (i, a) = self.locate(t)?;
        if t == a {
            return Ok(self.g1_node(i));
        }
        let d = t - a;
        let (m, me) = self.partial(a, t);
        let v = self.g1[i] + d * self.g[i] + 0.5 * d * d * (self.e[i] - PI) + m[2];
        let err = self.g1_err[i] + d * self.g_err[i] + 0.5 * d * d * self.e_err[i] + me[2];
        Ok(EvalResult::new(v, err).with_work(i as u64 + 1, 15))
    }

    /// A zero of E in [T, T + C√T]: grid scan for a sign change, bisection to
    /// width 1e-8, then one secant step.
    pub fn find_e_zero(&self, t: f64, c: f64) -> Result<EZeroRecord> {
        self.find_e_level(t, c, 0.0)
    }

    /// A solution of E(x) = level in [T, T + C√T], found the same way.
    pub fn find_e_level(&self, t: f64, c: f64, level: f64) -> Result<EZeroRecord> {
        let shifted = |x: f64| self.e(x).map(|r| EvalResult::new(r.value - level, r.abs_err));
        if !(t > 0.0 && t.is_finite()) || !(c >= 1.0 && c.is_finite()) {
            return Err(Error::domain(format!(
                "find_e_zero needs T > 0 and C >= 1 (T = {t}, C = {c})"
            )));
        }
        let end = t + c * t.sqrt();
        if end > self.x_end() {
            return Err(Error::GridCoverage {
                covered: self.x_end(),
                requested: end,
            });
        }
        let e_t = shifted(t)?;
        if e_t.value == 0.0 {
            return Ok(EZeroRecord {
                t_anchor: t,
                c,
                x_lo: t,
                x_hi: t,
                x_star: t,
                residual: e_t.abs_err,
            });
        }
        let mut prev = (t, e_t.value);
        let first = (t / CELL).floor() as usize + 1;
        let mut bracket = None;
        let mut i = first;
        loop {
            let x = Z2Data::cell_start(i);
            let (x, v) = if x < end {
                (x, self.e[i] - level)
            } else {
                (end, shifted(end)?.value)
            };
            if v == 0.0 || v.signum() != prev.1.signum() {
                bracket = Some((prev, (x, v)));
                break;
            }
            prev = (x, v);
            if x >= end {
                break;
            }
            i += 1;
        }
        let Some(((mut lo, mut flo), (mut hi, mut fhi))) = bracket else {
            return Err(Error::NoSignChange { lo: t, hi: end });
        };
        if fhi == 0.0 {
            let r = shifted(hi)?;
            return Ok(EZeroRecord {
                t_anchor: t,
                c,
                x_lo: lo,
                x_hi: hi,
                x_star: hi,
                residual: r.value.abs().max(r.abs_err),
            });
        }
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = shifted(mid)?.value;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                flo = 0.0;
                fhi = 0.0;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        let mut x_star = if flo.abs() <= fhi.abs() { lo } else { hi };
        if fhi != flo {
            let xs = lo - flo * (hi - lo) / (fhi - flo);
            if xs > lo && xs < hi {
                x_star = xs;
            }
        }
        let mut r = shifted(x_star)?;
        for (x, f) in [(lo, flo), (hi, fhi)] {
            if f.abs() < r.value.abs() {
                x_star = x;
                r = shifted(x)?;
            }
        }
        Ok(EZeroRecord {
            t_anchor: t,
            c,
            x_lo: lo,
            x_hi: hi,
            x_star,
            residual: r.value.abs().max(r.abs_err),
        })
    }

    /// max |E| over the tabulated nodes in [lo, hi].
    pub fn e_scale(&self, lo: f64, hi: f64) -> f64 {
        let i0 = (lo / CELL).ceil() as usize;
        let i1 = ((hi / CELL).floor() as usize).min(self.cells());
        self.e[i0.min(i1)..=i1].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Tables covering at least [0, t_max], shared across callers.
pub fn mean_square(t_max: f64) -> Result<Arc<MeanSquare>> {
    static CURRENT: Mutex<Option<Arc<MeanSquare>>> = Mutex::new(None);
    let mut guard = CURRENT.lock().unwrap();
    if let Some(ms) = guard.as_ref() {
        if ms.x_end() >= t_max {
            return Ok(ms.clone());
        }
    }
    let data = store().ensure(t_max)?;
    let ms = Arc::new(MeanSquare::from_data(data));
    *guard = Some(ms.clone());
    Ok(ms)
}

pub fn e(t: f64) -> Result<EvalResult<f64>> {
    mean_square(t)?.e(t)
}

pub fn g_quad(t: f64) -> Result<EvalResult<f64>> {
    mean_square(t)?.g(t)
}

pub fn g1_quad(t: f64) -> Result<EvalResult<f64>> {
    mean_square(t)?.g1(t)
}

pub fn find_e_zero(t: f64, c: f64) -> Result<EZeroRecord> {
    if !(t > 0.0) || !(c >= 1.0) {
        return Err(Error::domain(format!(
            "find_e_zero needs T > 0 and C >= 1 (T = {t}, C = {c})"
        )));
    }
    mean_square(t + c * t.sqrt())?.find_e_zero(t, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EZeroRecord {
    pub t_anchor: f64,
    pub c: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_star: f64,
    /// max(|E(x_star)|, error of that evaluation).
    pub residual: f64,
}

/// Append-only CSV of discovered zeros: `T_anchor,C,x_star,residual`.
#[derive(Debug, Clone)]
pub struct EZeroCache {
    path: PathBuf,
}

pub const E_ZERO_HEADER: &str = "T_anchor,C,x_star,residual";

impl EZeroCache {
    pub fn new(dir: &Path) -> Self {
        EZeroCache {
            path: dir.join("e_zeros.csv"),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// (T_anchor, C, x_star, residual) rows.
    pub fn load(&self) -> Result<Vec<[f64; 4]>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&self.path)?;
        let mut lines = text.lines();
        if lines.next() != Some(E_ZERO_HEADER) {
            return Err(Error::Format {
                path: self.path.display().to_string(),
                reason: format!("expected header {E_ZERO_HEADER}"),
            });
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let v: Vec<f64> = line.split(',').filter_map(|f| f.parse().ok()).collect();
            if v.len() != 4 {
                return Err(Error::Format {
                    path: self.path.display().to_string(),
                    reason: format!("bad row {line:?}"),
                });
            }
            rows.push([v[0], v[1], v[2], v[3]]);
        }
        Ok(rows)
    }

    pub fn lookup(&self, t: f64, c: f64) -> Result<Option<(f64, f64)>> {
        Ok(self
            .load()?
            .into_iter()
            .find(|r| r[0] == t && r[1] == c)
            .map(|r| (r[2], r[3])))
    }

    pub fn append(&self, rec: &EZeroRecord) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        let fresh = !self.path.exists();
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        if fresh {
            writeln!(f, "{E_ZERO_HEADER}")?;
        }
        writeln!(f, "{:?},{:?},{:?},{:?}", rec.t_anchor, rec.c, rec.x_star, rec.residual)?;
        Ok(())
    }

    /// Cached zero for (T, C), searching and recording it on a miss.
    pub fn find(&self, t: f64, c: f64) -> Result<(f64, f64)> {
        if let Some(hit) = self.lookup(t, c)? {
            return Ok(hit);
        }
        let rec = find_e_zero(t, c)?;
        self.append(&rec)?;
        Ok((rec.x_star, rec.residual))
    }
}

/// arsinh x = log(x + √(x²+1)), evaluated through log1p so small x keeps full precision.
pub fn arsinh(x: f64) -> f64 {
    let a = x.abs();
    let r = (a + a * a / (1.0 + (1.0 + a * a).sqrt())).ln_1p();
    r.copysign(x)
}

/// f(T, n) = 2T arsinh √(πn/2T) + √(2πnT + π²n²) − π/4.
pub fn f_phase(t: f64, n: u64) -> f64 {
    let n = n as f64;
    2.0 * t * arsinh((PI * n / (2.0 * t)).sqrt()) + (2.0 * PI * n * t + PI * PI * n * n).sqrt() - FRAC_PI_4
}

/// g(T, n) = T log(T/2πn) − T + π/4; requires 2πn < T.
pub fn g_phase(t: f64, n: u64) -> Result<f64> {
    let n = n as f64;
    if !(2.0 * PI * n < t) {
        return Err(Error::domain(format!("g(T, n) needs 2πn < T (T = {t}, n = {n})")));
    }
    Ok(t * (t / (2.0 * PI * n)).ln() - t + FRAC_PI_4)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GExplicitParams {
    pub t: f64,
    pub n: u64,
}

/// Bounds A·T < N < A′·T on the S1 cutoff.
pub const N_RANGE: (f64, f64) = (0.5, 2.0);

impl GExplicitParams {
    pub fn new(t: f64, n: u64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain("G_explicit needs T > 0"));
        }
        let nf = n as f64;
        if !(N_RANGE.0 * t < nf && nf < N_RANGE.1 * t) {
            return Err(Error::domain(format!(
                "N = {n} outside ({} T, {} T) for T = {t}",
                N_RANGE.0, N_RANGE.1
            )));
        }
        let p = GExplicitParams { t, n };
        if !(p.n_prime() < t / (2.0 * PI)) {
            return Err(Error::domain("N' must stay below T/2π"));
        }
        Ok(p)
    }

    /// N = T rounded to the nearest integer.
    pub fn with_default_n(t: f64) -> Result<Self> {
        Self::new(t, t.round() as u64)
    }

    /// N′ = T/2π + N/2 − √(N²/4 + NT/2π).
    pub fn n_prime(&self) -> f64 {
        let n = self.n as f64;
        let a = self.t / (2.0 * PI);
        // a + n/2 − √(n²/4 + n·a) = a² / (a + n/2 + √(n²/4 + n·a))
        a * a / (a + 0.5 * n + (0.25 * n * n + n * a).sqrt())
    }
}

/// S1(T; N) − S2(T; N), with abs_err = c_rem·T^(1/4).
pub fn g_explicit(params: &GExplicitParams, dtable: &DivisorTable) -> Result<EvalResult<f64>> {
    g_explicit_with(params, dtable, CALIBRATION.c_rem)
}

pub fn g_explicit_with(params: &GExplicitParams, dtable: &DivisorTable, c_rem: f64) -> Result<EvalResult<f64>> {
    let t = params.t;
    dtable.ensure_covers(params.n as usize)?;
    let (s1, s2) = explicit_sums(params, dtable);
    let n2 = params.n_prime().floor().max(0.0) as u64;
    Ok(EvalResult::new(s1 - s2, c_rem * t.powf(0.25)).with_work(params.n + n2, 0))
}

/// (S1, S2) of the explicit formula.
pub fn explicit_sums(params: &GExplicitParams, dtable: &DivisorTable) -> (f64, f64) {
    let t = params.t;
    let mut s1 = Neumaier::default();
    for n in 1..=params.n {
        let nf = n as f64;
        let ash = arsinh((PI * nf / (2.0 * t)).sqrt());
        let amp = dtable.get(n as usize) as f64 / nf.sqrt() / (ash * ash) * (t / (2.0 * PI * nf) + 0.25).powf(-0.25);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s1.add(sign * amp * f_phase(t, n).sin());
    }
    let mut s2 = Neumaier::default();
    let n2 = params.n_prime().floor().max(0.0) as u64;
    for n in 1..=n2 {
        let nf = n as f64;
        let l = (t / (2.0 * PI * nf)).ln();
        let g = g_phase(t, n).expect("n <= N' < T/2π");
        s2.add(dtable.get(n as usize) as f64 / nf.sqrt() / (l * l) * g.sin());
    }
    (2f64.powf(-1.5) * s1.total(), s2.total())
}

fn series_prefactor(t: f64) -> f64 {
    2f64.powf(-0.25) * PI.powf(-0.75) * t.powf(0.75)
}

/// Documented estimate of Σ_{n>M} d(n) n^(-5/4).
pub fn series_tail_estimate(m: u64) -> f64 {
    let m = m as f64;
    8.0 * m.powf(-0.25) * (m.ln() + 2.0)
}

/// 2^(-1/4) π^(-3/4) T^(3/4) Σ_{n≤M} (−1)^n d(n) n^(-5/4) sin(√(8πnT) − π/4).
///
/// abs_err = truncation tail estimate + c_series·T^(2/3) log T.
pub fn g_series(t: f64, m: u64, dtable: &DivisorTable) -> Result<EvalResult<f64>> {
    g_series_with(t, m, dtable, CALIBRATION.c_series)
}

pub fn g_series_with(t: f64, m: u64, dtable: &DivisorTable, c_series: f64) -> Result<EvalResult<f64>> {
    if !(t > 1.0) || m == 0 {
        return Err(Error::domain("G_series needs T > 1 and M >= 1"));
    }
    dtable.ensure_covers(m as usize)?;
    let mut s = Neumaier::default();
    for n in 1..=m {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s.add(sign * dtable.get(n as usize) as f64 * nf.powf(-1.25) * ((8.0 * PI * nf * t).sqrt() - FRAC_PI_4).sin());
    }
    let pre = series_prefactor(t);
    let err = pre * series_tail_estimate(m) + c_series * t.powf(2.0 / 3.0) * t.ln();
    Ok(EvalResult::new(pre * s.total(), err).with_work(m, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::divisor_sieve;
    use crate::quadrature::{integrate, QuadSpec};

    #[test]
    fn main_term_values() {
        assert_eq!(main_term(0.0), 0.0);
        assert!((main_term(2.0 * PI) - 0.970_320_662_386_827_5).abs() < 1e-14);
        assert!((main_term(100.0) - 292.172_444_938_181_16).abs() < 1e-11);
        assert!(main_term(1e-12).abs() < 1e-10);
    }

    #[test]
    fn log_moments_both_branches_agree() {
        for (a, b) in [(4.0, 4.25), (3.9, 4.15), (4.0, 4.1)] {
            let closed = {
                let f1 = |t: f64| t * t.ln() - t;
                let f2 = |t: f64| 0.5 * t * t * t.ln() - 0.25 * t * t;
                let f3 = |t: f64| t * t * t * t.ln() / 3.0 - t * t * t / 9.0;
                let m0 = f1(b) - f1(a);
                let p1 = f2(b) - f2(a);
                let p2 = f3(b) - f3(a);
                [m0, b * m0 - p1, 0.5 * b * b * m0 - b * p1 + 0.5 * p2]
            };
            let quad = [0, 1, 2].map(|k| {
                integrate(
                    |t| (b - t).powi(k) / [1.0, 1.0, 2.0][k as usize] * t.ln(),
                    a,
                    b,
                    &QuadSpec::with_tol(1e-14),
                )
                .unwrap()
                .value
            });
            let lm = log_moments(a, b);
            for k in 0..3 {
                assert!((closed[k] - quad[k]).abs() < 1e-12);
                assert!((lm[k] - quad[k]).abs() < 1e-12);
            }
        }
        let m = log_moments(0.0, 0.25);
        assert!((m[0] - (0.25 * 0.25f64.ln() - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn e_at_zero_and_ten() {
        let ms = MeanSquare::from_data(crate::samples::Z2Store::new(2000.0).ensure(20.0).unwrap());
        assert_eq!(ms.e(0.0).unwrap().value, 0.0);
        assert_eq!(ms.g(0.0).unwrap().value, 0.0);
        assert_eq!(ms.g1(0.0).unwrap().value, 0.0);
        let r = ms.e(10.0).unwrap();
        assert!((r.value - 3.791_341_074_041_333_3).abs() < 1e-10, "{}", r.value);
        let r = ms.e(10.1).unwrap();
        let direct = integrate(z_squared, 0.0, 10.1, &QuadSpec::with_tol(1e-13))
            .unwrap()
            .value
            - main_term(10.1);
        assert!((r.value - direct).abs() < 1e-10);
    }

    #[test]
    fn g_and_g1_match_nested_quadrature() {
        let ms = MeanSquare::from_data(crate::samples::Z2Store::new(2000.0).ensure(40.0).unwrap());
        let spec = QuadSpec::with_tol(1e-11);
        let e = |t: f64| ms.e(t).unwrap().value;
        for t in [7.3, 20.0, 33.33] {
            let g_direct = integrate(e, 0.0, t, &spec).unwrap().value - PI * t;
            let g = ms.g(t).unwrap();
            assert!((g.value - g_direct).abs() < 1e-8, "G({t}): {} vs {g_direct}", g.value);
        }
        let g = |t: f64| ms.g(t).unwrap().value;
        let t = 12.6;
        let g1_direct = integrate(g, 0.0, t, &QuadSpec::with_tol(1e-9)).unwrap().value;
        assert!((ms.g1(t).unwrap().value - g1_direct).abs() < 1e-7);
    }

    #[test]
    fn coverage_errors() {
        let ms = MeanSquare::from_data(crate::samples::Z2Store::new(2000.0).ensure(10.0).unwrap());
        let end = ms.x_end();
        assert!(matches!(ms.e(end + 1.0), Err(Error::GridCoverage { .. })));
        assert!(matches!(ms.find_e_zero(end, 10.0), Err(Error::GridCoverage { .. })));
        assert!(ms.find_e_zero(10.0, 0.5).unwrap_err().is_domain());
    }

    #[test]
    fn e_zero_in_small_interval() {
        let ms = MeanSquare::from_data(crate::samples::Z2Store::new(2000.0).ensure(300.0).unwrap());
        let r = ms.find_e_zero(100.0, 10.0).unwrap();
        assert!(r.x_lo >= 100.0 && r.x_hi <= 200.0 && r.x_lo <= r.x_star && r.x_star <= r.x_hi);
        assert!(r.x_hi - r.x_lo <= 1e-8);
        let (a, b) = (ms.e(r.x_lo).unwrap().value, ms.e(r.x_hi).unwrap().value);
        assert!(a.signum() != b.signum() || a == 0.0 || b == 0.0);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn phases() {
        assert_eq!(arsinh(0.0), 0.0);
        for x in [1e-300, 1e-12, 1e-3, 0.5, 3.0, 1e8, -2.0] {
            assert!((arsinh(x) - x.asinh()).abs() <= 4.0 * f64::EPSILON * x.asinh().abs());
        }
        let t = 1e6;
        let d = f_phase(t, 1) - ((8.0 * PI * t).sqrt() - FRAC_PI_4);
        assert!((d - 0.001_312_467_186_234_173_7).abs() < 1e-8);
        let t = 2.0 * PI * 7.0;
        assert!(g_phase(t, 7).unwrap_err().is_domain());
        let n = 5u64;
        let t = 2.0 * PI * 5.0 * (1.0 + 1e-15);
        assert!((g_phase(t, n).unwrap() - (-t + FRAC_PI_4)).abs() < 1e-12);
        let t = 500.0;
        for n in 1..100 {
            assert!(f_phase(t, n + 1) > f_phase(t, n));
        }
    }

    #[test]
    fn explicit_params() {
        assert!(GExplicitParams::new(1000.0, 500).is_err());
        assert!(GExplicitParams::new(1000.0, 2000).is_err());
        let p = GExplicitParams::with_default_n(1000.0).unwrap();
        assert_eq!(p.n, 1000);
        let n = 1000.0;
        let a = 1000.0 / (2.0 * PI);
        let naive = a + n / 2.0 - (n * n / 4.0 + n * a).sqrt();
        assert!((p.n_prime() - naive).abs() < 1e-9);
        assert!(p.n_prime() < a);
    }

    #[test]
    fn explicit_s2_empty_for_small_t() {
        let d = divisor_sieve(100).unwrap();
        let p = GExplicitParams::with_default_n(40.0).unwrap();
        assert!(p.n_prime() < 1.0);
        assert_eq!(explicit_sums(&p, &d).1, 0.0);
        let small = divisor_sieve(10).unwrap();
        assert!(matches!(g_explicit(&p, &small), Err(Error::Capacity { .. })));
    }

    #[test]
    fn series_single_term() {
        let d = divisor_sieve(10).unwrap();
        let t = 777.0;
        let r = g_series(t, 1, &d).unwrap();
        let want = -series_prefactor(t) * ((8.0 * PI * t).sqrt() - FRAC_PI_4).sin();
        assert!((r.value - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn e_zero_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EZeroCache::new(dir.path());
        assert!(cache.lookup(1.0, 2.0).unwrap().is_none());
        let rec = EZeroRecord {
            t_anchor: 100.0,
            c: 10.0,
            x_lo: 101.0,
            x_hi: 101.0,
            x_star: 101.0,
            residual: 1e-9,
        };
        cache.append(&rec).unwrap();
        cache.append(&EZeroRecord { t_anchor: 200.0, ..rec }).unwrap();
        let text = fs::read_to_string(cache.path()).unwrap();
        assert!(text.starts_with("T_anchor,C,x_star,residual\n100.0,10.0,101.0,1e-9\n"));
        assert_eq!(cache.lookup(200.0, 10.0).unwrap(), Some((101.0, 1e-9)));
    }
}
