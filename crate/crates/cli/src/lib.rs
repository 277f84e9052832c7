//! The `mz` command line: argument parsing, run configuration and output.
//!
//! Every subcommand evaluates one object of `mz_core` and renders it as JSON
//! or CSV. Exit codes: 0 success, 1 I/O or cache failure, 2 argument or
//! domain error, 3 numerical failure (the partial result is still written,
//! with an `error` field).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use mz_core::arith::{self, DivisorTable};
use mz_core::laplace;
use mz_core::mean_square::{self, EZeroCache, GExplicitParams};
use mz_core::mellin::{self, ComplexPoint, Method, XPolicy, Z1Config};
use mz_core::quadrature::QuadSpec;
use mz_core::samples;
use mz_core::zeta::{self, ZetaOptions};
use mz_core::{Error, EvalResult, EULER_GAMMA, LN_2PI};

pub const CACHE_ENV: &str = "MZ_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Csv,
    Json,
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Output as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mz",
    version,
    about = "Mellin transform of the mean square of zeta on the critical line"
)]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory for the Z² node table, divisor tables and E-zeros.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub output: Option<Output>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key=value file with tol, cache_dir, threads, output.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZetaMethodArg {
    Auto,
    Rs,
    Em,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Z1MethodArg {
    Auto,
    Direct,
    Continued,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hardy's Z(t) and ζ(1/2 + it).
    Zeta {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: ZetaMethodArg,
    },
    /// E(T).
    E {
        #[arg(long = "T", visible_alias = "t")]
        t: f64,
    },
    /// G(T) and G1(T), optionally against the explicit formula and the series.
    G {
        #[arg(long = "T", visible_alias = "t")]
        t: f64,
        #[arg(long)]
        explicit: bool,
        /// Cutoff of S1 (default: T rounded).
        #[arg(long = "N")]
        n: Option<u64>,
        /// Terms of the series.
        #[arg(long = "M", default_value_t = 10_000)]
        m: u64,
    },
    /// A zero of E in [T, T + C√T].
    ZeroE {
        #[arg(long = "T", visible_alias = "t")]
        t: f64,
        #[arg(long = "C", default_value_t = 10.0)]
        c: f64,
    },
    /// L1(1/T) and the residual L1(1/T) − T(log(T/2π) + γ).
    Laplace {
        #[arg(long = "T", visible_alias = "t")]
        t: f64,
    },
    /// Z1(σ + it).
    Z1 {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: Z1MethodArg,
        /// Truncation point of the direct method (default: automatic).
        #[arg(long = "X")]
        x: Option<f64>,
        #[arg(long, default_value = "min_cost")]
        x_policy: String,
        #[arg(long, default_value_t = 1)]
        resolution: u32,
    },
    /// c0 and c1 of Z1(s) = c0/(s−1)² + c1/(s−1) + O(1).
    Laurent {
        #[arg(long, value_delimiter = ',', default_values_t = mellin::DEFAULT_H.to_vec())]
        h: Vec<f64>,
    },
    /// Z1(s)Γ(s) against ∫ L̄1(x) x^(s−1) dx.
    Bridge {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        t: f64,
    },
    /// Z1 along a vertical line with the comparison bounds.
    Scan {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        resolution: u32,
    },
    /// Exact a_n, and b_n fitted at the given T samples.
    Coeffs {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        fit: Vec<f64>,
    },
}

/// Settings after merging flags, environment and config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tol: f64,
    pub cache_dir: Option<PathBuf>,
    pub threads: usize,
    pub output: Option<Output>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: 1e-8,
            cache_dir: None,
            threads: 0,
            output: None,
        }
    }
}

/// Failure with its exit code and whatever partial result exists.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    pub partial: Option<Value>,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: msg.into(),
            partial: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_domain() {
            2
        } else if matches!(e, Error::Io(_) | Error::Format { .. }) {
            1
        } else {
            3
        };
        let partial = match &e {
            Error::Convergence { best } => Some(eval_json(best)),
            Error::ConvergenceComplex { best } => Some(complex_json(best)),
            _ => None,
        };
        Failure {
            code,
            message: e.to_string(),
            partial,
        }
    }
}

type CmdResult = Result<Value, Failure>;

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().replace('-', "_");
        if !matches!(k.as_str(), "tol" | "cache_dir" | "threads" | "output") {
            return Err(format!("config line {}: unknown key {k:?}", i + 1));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
}

/// Flags override the environment, which overrides the config file.
pub fn resolve(flags: &Flags, env_cache: Option<&str>) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        for (k, v) in parse_config(&text)? {
            match k.as_str() {
                "tol" => cfg.tol = parse_value(&k, &v)?,
                "cache_dir" => cfg.cache_dir = Some(PathBuf::from(v)),
                "threads" => cfg.threads = parse_value(&k, &v)?,
                "output" => cfg.output = Some(parse_value(&k, &v)?),
                _ => unreachable!(),
            }
        }
    }
    if let Some(dir) = env_cache.filter(|d| !d.is_empty()) {
        cfg.cache_dir = Some(PathBuf::from(dir));
    }
    if let Some(t) = flags.tol {
        cfg.tol = t;
    }
    if let Some(d) = &flags.cache_dir {
        cfg.cache_dir = Some(d.clone());
    }
    if let Some(n) = flags.threads {
        cfg.threads = n;
    }
    if flags.output.is_some() {
        cfg.output = flags.output;
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return Err(format!("tol must lie in (0, 1), got {}", cfg.tol));
    }
    Ok(cfg)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, env_cache: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match resolve(&cli.flags, env_cache) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let mut log = Vec::new();
    let (text, code) = pool.install(|| execute(&cli.command, &cfg, &mut log));
    let _ = stderr.write_all(&log);
    let written = match &cli.flags.out {
        Some(path) => fs::write(path, &text),
        None => stdout.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 1;
    }
    code
}

fn execute(cmd: &Command, cfg: &RunConfig, stderr: &mut Vec<u8>) -> (String, i32) {
    if let Some(dir) = &cfg.cache_dir {
        if let Err(e) = samples::store().attach_cache(dir) {
            let _ = writeln!(stderr, "error: {e}");
            return (String::new(), 1);
        }
    }
    if let Command::Scan {
        sigma,
        t0,
        t1,
        dt,
        resolution,
    } = cmd
    {
        return scan(*sigma, *t0, *t1, *dt, *resolution, cfg, stderr);
    }
    let format = cfg.output.unwrap_or(Output::Json);
    match dispatch(cmd, cfg) {
        Ok(v) => (render(&v, format), 0),
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            let text = match f.partial {
                Some(Value::Object(mut m)) => {
                    m.insert("error".into(), Value::String(f.message.clone()));
                    render(&Value::Object(m), format)
                }
                _ => String::new(),
            };
            (text, f.code)
        }
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> CmdResult {
    let spec = QuadSpec::with_tol(cfg.tol);
    match *cmd {
        Command::Zeta { t, method } => cmd_zeta(t, method),
        Command::E { t } => cmd_e(t),
        Command::G { t, explicit, n, m } => cmd_g(t, explicit, n, m, cfg),
        Command::ZeroE { t, c } => cmd_zero_e(t, c, cfg),
        Command::Laplace { t } => cmd_laplace(t, &spec),
        Command::Z1 {
            sigma,
            t,
            method,
            x,
            ref x_policy,
            resolution,
        } => {
            let mut zc = z1_config(cfg, resolution)?;
            zc.x_policy = XPolicy::from_str(x_policy)?;
            cmd_z1(ComplexPoint::new(sigma, t), method, x, &zc)
        }
        Command::Laurent { ref h } => cmd_laurent(h, &z1_config(cfg, 1)?),
        Command::Bridge { sigma, t } => cmd_bridge(ComplexPoint::new(sigma, t), &spec),
        Command::Coeffs { n, ref fit } => cmd_coeffs(n, fit, &spec),
        Command::Scan { .. } => unreachable!("handled by execute"),
    }
}

pub fn z1_config(cfg: &RunConfig, resolution: u32) -> Result<Z1Config, Failure> {
    if !(1..=4).contains(&resolution) {
        return Err(Failure::usage(format!("resolution must be 1..=4, got {resolution}")));
    }
    Ok(Z1Config {
        resolution,
        spec: QuadSpec::with_tol(cfg.tol),
        cache_dir: cfg.cache_dir.clone(),
        ..Z1Config::default()
    })
}

fn eval_json(r: &EvalResult<f64>) -> Value {
    json!({"value": r.value, "abs_err": r.abs_err})
}

fn complex_json(r: &EvalResult<Complex64>) -> Value {
    json!({"value": {"re": r.value.re, "im": r.value.im}, "abs_err": r.abs_err})
}

fn cmd_zeta(t: f64, method: ZetaMethodArg) -> CmdResult {
    let opts = match method {
        ZetaMethodArg::Auto => ZetaOptions::default(),
        ZetaMethodArg::Rs => ZetaOptions::riemann_siegel(4),
        ZetaMethodArg::Em => ZetaOptions::euler_maclaurin(),
    };
    let z = zeta::hardy_z(t, &opts)?;
    let zh = zeta::zeta_half(t, &opts)?;
    Ok(json!({
        "t": t,
        "Z": eval_json(&z),
        "zeta": complex_json(&zh),
        "theta": zeta::rs_theta(t).value,
    }))
}

fn cmd_e(t: f64) -> CmdResult {
    let e = mean_square::e(t)?;
    Ok(json!({"T": t, "E": eval_json(&e), "main_term": mean_square::main_term(t)}))
}

fn divisors(n_max: u64, cfg: &RunConfig) -> Result<DivisorTable, Error> {
    match &cfg.cache_dir {
        Some(dir) => arith::load_or_build(dir, n_max),
        None => arith::divisor_sieve(n_max),
    }
}

fn cmd_g(t: f64, explicit: bool, n: Option<u64>, m: u64, cfg: &RunConfig) -> CmdResult {
    let g = mean_square::g_quad(t)?;
    let g1 = mean_square::g1_quad(t)?;
    let mut out = json!({"T": t, "G": eval_json(&g), "G1": eval_json(&g1)});
    if explicit {
        let params = match n {
            Some(n) => GExplicitParams::new(t, n)?,
            None => GExplicitParams::with_default_n(t)?,
        };
        let table = divisors(params.n.max(m), cfg)?;
        let ge = mean_square::g_explicit(&params, &table)?;
        let gs = mean_square::g_series(t, m, &table)?;
        out["N"] = json!(params.n);
        out["M"] = json!(m);
        out["G_explicit"] = eval_json(&ge);
        out["G_series"] = eval_json(&gs);
    }
    Ok(out)
}

fn cmd_zero_e(t: f64, c: f64, cfg: &RunConfig) -> CmdResult {
    let (x, residual) = match &cfg.cache_dir {
        Some(dir) => EZeroCache::new(dir).find(t, c)?,
        None => {
            let r = mean_square::find_e_zero(t, c)?;
            (r.x_star, r.residual)
        }
    };
    Ok(json!({"T": t, "C": c, "x_star": x, "residual": residual}))
}

fn cmd_laplace(t: f64, spec: &QuadSpec) -> CmdResult {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::usage("laplace needs T > 0"));
    }
    let l = laplace::l1(1.0 / t, spec)?;
    let r = laplace::kober_residual(t, spec)?;
    Ok(json!({
        "T": t,
        "sigma": 1.0 / t,
        "L1": eval_json(&l),
        "residual": eval_json(&r),
        "residual_minus_pi": r.value - PI,
    }))
}

fn cmd_z1(p: ComplexPoint, method: Z1MethodArg, x: Option<f64>, cfg: &Z1Config) -> CmdResult {
    let direct = |p| -> Result<_, Error> {
        let x = match x {
            Some(x) => x,
            None => mellin::direct_truncation(cfg)?,
        };
        mellin::z1_direct(p, x, &cfg.spec)
    };
    let r = match method {
        Z1MethodArg::Auto if p.sigma >= mellin::DIRECT_SIGMA_MIN => direct(p),
        Z1MethodArg::Auto | Z1MethodArg::Continued => mellin::z1_continued(p, cfg),
        Z1MethodArg::Direct => direct(p),
    };
    match r {
        Ok(z) => Ok(z.to_json()),
        Err(e @ Error::PoleProximity { .. }) => {
            let v = mellin::laurent_model(p.s());
            let mut f = Failure::from(e);
            f.partial = Some(json!({
                "s": {"sigma": p.sigma, "t": p.t},
                "value": {"re": v.re, "im": v.im},
                "abs_err": Value::Null,
                "method": "laurent_model",
                "X_used": Value::Null,
            }));
            Err(f)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_laurent(h: &[f64], cfg: &Z1Config) -> CmdResult {
    let fit = mellin::laurent_coeffs(h, cfg)?;
    Ok(json!({
        "h": fit.h,
        "phi": fit.phi.iter().map(eval_json).collect::<Vec<_>>(),
        "c0": eval_json(&fit.c0),
        "c1": eval_json(&fit.c1),
        "c0_extrap": fit.c0_extrap,
        "c1_extrap": fit.c1_extrap,
        "c0_target": 1.0,
        "c1_target": 2.0 * EULER_GAMMA - LN_2PI,
        "method": {"h>=0.2": Method::Direct.as_str(), "h<0.2": Method::Continued.as_str()},
    }))
}

fn cmd_bridge(p: ComplexPoint, spec: &QuadSpec) -> CmdResult {
    let b = mellin::gamma_bridge(p, spec)?;
    Ok(json!({
        "s": {"sigma": p.sigma, "t": p.t},
        "lhs": complex_json(&b.lhs),
        "rhs": complex_json(&b.rhs),
        "rel": eval_json(&b.rel),
    }))
}

fn cmd_coeffs(n: usize, fit: &[f64], spec: &QuadSpec) -> CmdResult {
    let table = if fit.is_empty() {
        laplace::a_coeffs(n)?
    } else {
        laplace::fit_b(n, fit, spec)?
    };
    let mut v = table.to_json();
    v["N"] = json!(n);
    v["condition"] = json!(table.condition);
    Ok(v)
}

fn scan(
    sigma: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    resolution: u32,
    cfg: &RunConfig,
    stderr: &mut Vec<u8>,
) -> (String, i32) {
    let rows = z1_config(cfg, resolution).and_then(|zc| Ok(mellin::scan_line(sigma, t0, t1, dt, &zc)?));
    let rows = match rows {
        Ok(r) => r,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return (String::new(), f.code);
        }
    };
    let mut code = 0;
    for r in rows.iter() {
        if let Some(e) = &r.error {
            let _ = writeln!(stderr, "error at t = {}: {e}", r.t);
            code = 3;
        }
    }
    let summary = scan_summary(&rows);
    let _ = writeln!(
        stderr,
        "max |Z1|/t^(1/3) = {} at t = {}; min bound_13/|Z1| = {}",
        summary.max_ratio, summary.t_max, summary.min_window_margin
    );
    let text = match cfg.output.unwrap_or(Output::Csv) {
        Output::Csv => {
            let mut buf = Vec::new();
            mellin::write_scan_csv(&rows, &mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("ascii")
        }
        Output::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = json!({
                        "t": r.t, "sigma": r.sigma, "re": r.re, "im": r.im, "abs": r.abs,
                        "abs_err": r.abs_err, "X_used": r.x_used,
                        "bound_13": r.bound_13, "bound_14": r.bound_14,
                    });
                    if let Some(e) = &r.error {
                        v["error"] = json!(e);
                    }
                    v
                })
                .collect();
            pretty(&Value::Array(arr))
        }
    };
    (text, code)
}

/// Scan statistics reported next to the rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    /// max over rows of |Z1(σ + it)|/t^(1/3)
    pub max_ratio: f64,
    pub t_max: f64,
    /// min over rows of bound_13/|Z1|; below 1 would contradict the window bound.
    pub min_window_margin: f64,
}

pub fn scan_summary(rows: &[mellin::ScanRow]) -> ScanSummary {
    let mut s = ScanSummary {
        max_ratio: f64::NAN,
        t_max: f64::NAN,
        min_window_margin: f64::NAN,
    };
    for r in rows.iter().filter(|r| r.abs.is_finite()) {
        let q = r.abs / r.t.cbrt();
        if !(q <= s.max_ratio) {
            s.max_ratio = q;
            s.t_max = r.t;
        }
        let m = r.bound_13 / r.abs;
        if m.is_finite() && !(m >= s.min_window_margin) {
            s.min_window_margin = m;
        }
    }
    s
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn render(v: &Value, format: Output) -> String {
    match format {
        Output::Json => pretty(v),
        Output::Csv => {
            let mut flat = Map::new();
            flatten("", v, &mut flat);
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(flat.keys()).expect("writing to memory");
            w.write_record(flat.values().map(cell)).expect("writing to memory");
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

/// Cache directory from the environment, if set.
pub fn env_cache_dir() -> Option<String> {
    std::env::var(CACHE_ENV).ok()
}
