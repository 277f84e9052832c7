//! Adaptive Gauss–Kronrod quadrature and cumulative prefix integrals.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::sum::{ComplexNeumaier, Neumaier};

/// Abscissae of the 15-point Kronrod rule on [-1, 1], ascending.
pub const GK15_NODES: [f64; 15] = [
    -0.991_455_371_120_812_6,
    -0.949_107_912_342_758_5,
    -0.864_864_423_359_769_1,
    -0.741_531_185_599_394_4,
    -0.586_087_235_467_691_1,
    -0.405_845_151_377_397_2,
    -0.207_784_955_007_898_5,
    0.0,
    0.207_784_955_007_898_5,
    0.405_845_151_377_397_2,
    0.586_087_235_467_691_1,
    0.741_531_185_599_394_4,
    0.864_864_423_359_769_1,
    0.949_107_912_342_758_5,
    0.991_455_371_120_812_6,
];

/// Kronrod weights matching [`GK15_NODES`].
pub const GK15_KRONROD: [f64; 15] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
    0.204_432_940_075_298_9,
    0.190_350_578_064_785_4,
    0.169_004_726_639_267_9,
    0.140_653_259_715_525_92,
    0.104_790_010_322_250_18,
    0.063_092_092_629_978_553,
    0.022_935_322_010_529_225,
];

/// Weights of the embedded 7-point Gauss rule; zero at the Kronrod-only nodes.
pub const GK15_GAUSS: [f64; 15] = [
    0.0,
    0.129_484_966_168_869_7,
    0.0,
    0.279_705_391_489_276_7,
    0.0,
    0.381_830_050_505_118_9,
    0.0,
    0.417_959_183_673_469_4,
    0.0,
    0.381_830_050_505_118_9,
    0.0,
    0.279_705_391_489_276_7,
    0.0,
    0.129_484_966_168_869_7,
    0.0,
];

/// Nodes of the 15-point rule mapped to [a, b].
pub fn gk15_points(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GK15_NODES.map(|u| c + h * u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub min_panel_width: f64,
    /// Local angular frequency of the integrand (radians per unit x); 0 disables the panel cap.
    pub osc_freq_hint: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_panels: 20_000,
            min_panel_width: 1e-12,
            osc_freq_hint: 0.0,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadSpec {
            rel_tol: tol,
            abs_tol: tol,
            ..Default::default()
        }
    }

    pub fn with_osc(mut self, omega: f64) -> Self {
        self.osc_freq_hint = omega;
        self
    }

    /// Tolerances divided by `factor`.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rel_tol /= factor;
        self.abs_tol /= factor;
        self
    }

    pub fn tolerance(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.min_panel_width > 0.0) {
            return Err(Error::domain(
                "quadrature tolerances and min panel width must be positive",
            ));
        }
        if !(self.osc_freq_hint >= 0.0) || self.max_panels == 0 {
            return Err(Error::domain("oscillation hint must be >= 0 and max_panels >= 1"));
        }
        Ok(())
    }
}

/// Values the adaptive driver can integrate.
trait Field: Copy {
    fn zero() -> Self;
    fn axpy(self, w: f64, v: Self) -> Self;
    fn scale(self, c: f64) -> Self;
    fn norm(self) -> f64;
    fn finite(self) -> bool;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn axpy(self, w: f64, v: Self) -> Self {
        self + w * v
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(self, w: f64, v: Self) -> Self {
        self + v * w
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn norm(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq() && self.a.total_cmp(&other.a).is_eq()
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // largest error first; ties broken by position for determinism
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15_panel<V: Field>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> Panel<V> {
    let h = 0.5 * (b - a);
    let mut k = V::zero();
    let mut g = V::zero();
    let mut abs_sum = 0.0;
    for (i, x) in gk15_points(a, b).into_iter().enumerate() {
        let v = f(x);
        k = k.axpy(GK15_KRONROD[i], v);
        if GK15_GAUSS[i] != 0.0 {
            g = g.axpy(GK15_GAUSS[i], v);
        }
        abs_sum += GK15_KRONROD[i] * v.norm();
    }
    let value = k.scale(h);
    let diff = k.axpy(-1.0, g).norm() * h.abs();
    let rounding = 50.0 * f64::EPSILON * abs_sum * h.abs();
    let err = if value.finite() {
        diff.max(rounding)
    } else {
        f64::INFINITY
    };
    Panel { a, b, value, err }
}

/// Splits [a, b] into consecutive panels no wider than `cap(x)` at their left end.
fn initial_panels(a: f64, b: f64, cap: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x = a;
    while x < b {
        let w = cap(x);
        let next = if w.is_finite() && x + w < b { x + w } else { b };
        out.push((x, next));
        x = next;
    }
    out
}

fn adapt<V: Field>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    spec: &QuadSpec,
    cap: &dyn Fn(f64) -> f64,
    add: impl Fn(&[Panel<V>]) -> V,
) -> (EvalResult<V>, bool) {
    let starts = initial_panels(a, b, cap);
    let mut heap: BinaryHeap<Panel<V>> = BinaryHeap::with_capacity(starts.len() * 2);
    let mut frozen: Vec<Panel<V>> = Vec::new();
    let mut n_evals = 0u64;
    for (lo, hi) in starts {
        heap.push(gk15_panel(&mut f, lo, hi));
        n_evals += 15;
    }
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    let mut total_val = heap.iter().fold(V::zero(), |s, p| s.axpy(1.0, p.value));
    let mut panels = heap.len();
    let mut converged = false;
    loop {
        if total_err <= spec.tolerance(total_val.norm()) {
            converged = true;
            break;
        }
        if panels >= spec.max_panels {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if 0.5 * (worst.b - worst.a) < spec.min_panel_width || mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let left = gk15_panel(&mut f, worst.a, mid);
        let right = gk15_panel(&mut f, mid, worst.b);
        n_evals += 30;
        total_err += left.err + right.err - worst.err;
        total_val = total_val
            .axpy(1.0, left.value)
            .axpy(1.0, right.value)
            .axpy(-1.0, worst.value);
        heap.push(left);
        heap.push(right);
        panels += 1;
    }
    let mut all: Vec<Panel<V>> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    let err: f64 = all.iter().map(|p| p.err).sum();
    let value = add(&all);
    (
        EvalResult::new(value, err).with_work(all.len() as u64, n_evals),
        converged,
    )
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!(
            "integration interval [{a}, {b}] must satisfy a < b"
        )));
    }
    Ok(())
}

fn quarter_period_cap(omega: f64) -> impl Fn(f64) -> f64 {
    move |_| {
        if omega > 0.0 {
            FRAC_PI_2 / omega
        } else {
            f64::INFINITY
        }
    }
}

/// ∫_a^b f(x) dx.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, spec: &QuadSpec) -> Result<EvalResult<f64>> {
    check_interval(a, b)?;
    spec.validate()?;
    let cap = quarter_period_cap(spec.osc_freq_hint);
    let (res, ok) = adapt(f, a, b, spec, &cap, |ps| {
        ps.iter().map(|p| p.value).collect::<Neumaier>().total()
    });
    if ok {
        Ok(res)
    } else {
        Err(Error::Convergence { best: res })
    }
}

/// ∫_a^b g(x) dx for complex-valued g.
pub fn integrate_complex_fn(
    f: impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<EvalResult<Complex64>> {
    check_interval(a, b)?;
    spec.validate()?;
    let cap = quarter_period_cap(spec.osc_freq_hint);
    let (res, ok) = adapt(f, a, b, spec, &cap, sum_complex);
    if ok {
        Ok(res)
    } else {
        Err(Error::ConvergenceComplex { best: res })
    }
}

fn sum_complex(ps: &[Panel<Complex64>]) -> Complex64 {
    let mut acc = ComplexNeumaier::default();
    for p in ps {
        acc.add(p.value);
    }
    acc.total()
}

/// ∫_a^b amplitude(x) x^(-σ) e^(-it log x) dx.
///
/// Panels are capped at a quarter of the local period 2πx/|t| of the phase,
/// which is `π/(2·hint)` with hint `|t|/a` at the left end and widens with x.
/// A nonzero `spec.osc_freq_hint` tightens the cap further.
pub fn integrate_complex(
    mut amplitude: impl FnMut(f64) -> f64,
    sigma: f64,
    t: f64,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<EvalResult<Complex64>> {
    check_interval(a, b)?;
    if a < 1.0 {
        return Err(Error::domain("integrate_complex needs a >= 1"));
    }
    spec.validate()?;
    let extra = spec.osc_freq_hint;
    let cap = move |x: f64| {
        let omega = (t.abs() / x).max(extra);
        if omega > 0.0 {
            FRAC_PI_2 / omega
        } else {
            f64::INFINITY
        }
    };
    let f = |x: f64| {
        let l = x.ln();
        Complex64::from_polar(amplitude(x) * (-sigma * l).exp(), -t * l)
    };
    let (res, ok) = adapt(f, a, b, spec, &cap, sum_complex);
    if ok {
        Ok(res)
    } else {
        Err(Error::ConvergenceComplex { best: res })
    }
}

/// Prefix integrals of f on a uniform grid x0, x0 + step, ...
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeGrid {
    pub x0: f64,
    pub step: f64,
    /// prefix[i] ≈ ∫_{x0}^{x0 + i·step} f.
    pub prefix: Vec<f64>,
    /// Error of the single cell ending at node i; per_cell_err[0] = 0.
    pub per_cell_err: Vec<f64>,
    err_prefix: Vec<f64>,
}

impl CumulativeGrid {
    pub fn new(x0: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && x0.is_finite()) {
            return Err(Error::domain("cumulative grid needs a finite x0 and step > 0"));
        }
        Ok(CumulativeGrid {
            x0,
            step,
            prefix: vec![0.0],
            per_cell_err: vec![0.0],
            err_prefix: vec![0.0],
        })
    }

    /// Builds a grid from per-cell integrals and their errors.
    pub fn from_cells(x0: f64, step: f64, cells: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut g = Self::new(x0, step)?;
        g.push_cells(cells);
        Ok(g)
    }

    fn push_cells(&mut self, cells: impl IntoIterator<Item = (f64, f64)>) {
        // running compensated sum so long grids do not drift
        let mut acc = Neumaier::default();
        acc.add(*self.prefix.last().unwrap());
        let mut err = *self.err_prefix.last().unwrap();
        for (v, e) in cells {
            acc.add(v);
            err += e;
            self.prefix.push(acc.total());
            self.per_cell_err.push(e);
            self.err_prefix.push(err);
        }
    }

    pub fn cells(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn x_end(&self) -> f64 {
        self.node(self.cells())
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.step
    }

    pub fn total_err(&self) -> f64 {
        *self.err_prefix.last().unwrap()
    }

    /// Accumulated error of prefix[i].
    pub fn err_at(&self, i: usize) -> f64 {
        self.err_prefix[i]
    }

    /// Appends cells until the grid reaches at least x1.
    pub fn extend(&mut self, mut f: impl FnMut(f64) -> f64, x1: f64, spec: &QuadSpec) -> Result<()> {
        let target = ((x1 - self.x0) / self.step - 1e-9).ceil().max(0.0) as usize;
        let mut cells = Vec::new();
        for i in self.cells()..target {
            let r = integrate(&mut f, self.node(i), self.node(i + 1), spec)?;
            cells.push((r.value, r.abs_err));
        }
        self.push_cells(cells);
        Ok(())
    }

    /// Index i with node(i) <= x < node(i+1), clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let i = ((x - self.x0) / self.step).floor();
        (i.max(0.0) as usize).min(self.cells())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::with_capacity(48 * self.prefix.len());
        s.push_str("x,prefix,err\n");
        for i in 0..self.prefix.len() {
            let _ = writeln!(s, "{:?},{:?},{:?}", self.node(i), self.prefix[i], self.per_cell_err[i]);
        }
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        if lines.next() != Some("x,prefix,err") {
            return Err(bad("missing header x,prefix,err".into()));
        }
        let mut xs = Vec::new();
        let mut prefix = Vec::new();
        let mut errs = Vec::new();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let parsed: Vec<f64> = fields.iter().filter_map(|f| f.parse().ok()).collect();
            if fields.len() != 3 || parsed.len() != 3 {
                return Err(bad(format!("line {} is not three numbers", n + 2)));
            }
            xs.push(parsed[0]);
            prefix.push(parsed[1]);
            errs.push(parsed[2]);
        }
        if xs.len() < 2 || prefix[0] != 0.0 {
            return Err(bad("grid needs at least two nodes and prefix[0] = 0".into()));
        }
        let step = xs[1] - xs[0];
        let mut g = Self::new(xs[0], step).map_err(|e| bad(e.to_string()))?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - g.node(i)).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(bad(format!("node {i} is off the uniform grid")));
            }
        }
        let mut err = 0.0;
        for i in 1..xs.len() {
            err += errs[i];
            g.prefix.push(prefix[i]);
            g.per_cell_err.push(errs[i]);
            g.err_prefix.push(err);
        }
        Ok(g)
    }
}

/// Prefix integrals of f from x0 to x1 in cells of width `step`.
pub fn cumulative(f: impl FnMut(f64) -> f64, x0: f64, x1: f64, step: f64, spec: &QuadSpec) -> Result<CumulativeGrid> {
    check_interval(x0, x1)?;
    let mut g = CumulativeGrid::new(x0, step)?;
    g.extend(f, x1, spec)?;
    Ok(g)
}
