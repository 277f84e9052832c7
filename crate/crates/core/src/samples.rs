//! Shared table of Z(x)² on the 15-point Kronrod nodes of uniform cells.
//!
//! The table starts at x = 0 with cells of width [`CELL`]. It grows on demand
//! and is shared between E(T), G(T), G1(T) and the Mellin integrals, so each
//! value of Z is computed once per process (or once per cache directory when a
//! disk cache is attached).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{gk15_points, integrate, CumulativeGrid, QuadSpec, GK15_GAUSS, GK15_KRONROD};
use crate::zeta::{z_squared, z_squared_err};

/// Cell width of the table.
pub const CELL: f64 = 0.25;

/// Default coverage limit of the shared table.
pub const DEFAULT_LIMIT: f64 = 120_000.0;

/// Magic number of the node cache file ("MZZ2" read as a little-endian u32).
pub const NODE_CACHE_MAGIC: u32 = 0x4D5A_5A32;

const NODE_CACHE_FILE: &str = "z2_nodes_v1.bin";

// Cells whose Kronrod/Gauss gap exceeds this tolerance are re-integrated adaptively.
fn refine_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-9,
        abs_tol: 1e-9,
        max_panels: 16,
        ..QuadSpec::default()
    }
}

/// Immutable snapshot of the table.
#[derive(Debug, Clone, Default)]
pub struct Z2Data {
    /// Z² at the 15 nodes of each cell, cell-major.
    pub values: Vec<f64>,
    /// ∫ Z² over each cell.
    pub cell_int: Vec<f64>,
    /// Error of `cell_int`: quadrature plus pointwise evaluation error.
    pub cell_err: Vec<f64>,
}

impl Z2Data {
    pub fn cells(&self) -> usize {
        self.cell_int.len()
    }

    pub fn x_end(&self) -> f64 {
        self.cells() as f64 * CELL
    }

    pub fn cell_start(i: usize) -> f64 {
        i as f64 * CELL
    }

    pub fn nodes(&self, i: usize) -> &[f64] {
        &self.values[15 * i..15 * i + 15]
    }

    /// Prefix integrals ∫_0^x Z² at the cell boundaries.
    pub fn cumulative(&self) -> CumulativeGrid {
        CumulativeGrid::from_cells(
            0.0,
            CELL,
            self.cell_int.iter().copied().zip(self.cell_err.iter().copied()),
        )
        .expect("cell width is positive")
    }
}

fn evaluate_cells(first: usize, last: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let per_cell: Vec<([f64; 15], f64, f64)> = (first..last)
        .into_par_iter()
        .map(|i| {
            let a = Z2Data::cell_start(i);
            let b = a + CELL;
            let xs = gk15_points(a, b);
            let vals = xs.map(z_squared);
            let (int, err) = cell_quadrature(a, b, &vals);
            (vals, int, err)
        })
        .collect();
    let mut values = Vec::with_capacity(15 * per_cell.len());
    let mut ints = Vec::with_capacity(per_cell.len());
    let mut errs = Vec::with_capacity(per_cell.len());
    for (v, i, e) in per_cell {
        values.extend_from_slice(&v);
        ints.push(i);
        errs.push(e);
    }
    (values, ints, errs)
}

fn cell_quadrature(a: f64, b: f64, vals: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    let mut f_err = 0.0;
    for j in 0..15 {
        k += GK15_KRONROD[j] * vals[j];
        g += GK15_GAUSS[j] * vals[j];
        f_err += GK15_KRONROD[j] * z_squared_err(a + h * (1.0 + crate::quadrature::GK15_NODES[j]), vals[j]);
    }
    let quad_err = h * (k - g).abs();
    let spec = refine_spec();
    if quad_err <= spec.tolerance(h * k.abs()) {
        return (h * k, quad_err + h * f_err + 4.0 * f64::EPSILON * h * k.abs());
    }
    match integrate(z_squared, a, b, &spec) {
        Ok(r) => (r.value, r.abs_err + h * f_err),
        Err(Error::Convergence { best }) => (best.value, best.abs_err + h * f_err),
        Err(_) => (h * k, quad_err + h * f_err),
    }
}

/// Growable, thread-safe table of Z² samples.
pub struct Z2Store {
    limit: f64,
    cache_dir: Mutex<Option<PathBuf>>,
    data: Mutex<Arc<Z2Data>>,
}

impl Z2Store {
    pub fn new(limit: f64) -> Self {
        Z2Store {
            limit,
            cache_dir: Mutex::new(None),
            data: Mutex::new(Arc::new(Z2Data::default())),
        }
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    /// Attaches a directory holding the node cache; existing cached nodes are loaded.
    pub fn attach_cache(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        *self.cache_dir.lock().unwrap() = Some(dir.to_path_buf());
        let path = dir.join(NODE_CACHE_FILE);
        if path.exists() {
            let loaded = read_node_cache(&path)?;
            let mut guard = self.data.lock().unwrap();
            if loaded.cells() > guard.cells() {
                *guard = Arc::new(loaded);
            }
        }
        Ok(())
    }

    /// Current snapshot without extension.
    pub fn snapshot(&self) -> Arc<Z2Data> {
        self.data.lock().unwrap().clone()
    }

    /// Snapshot covering at least [0, x].
    pub fn ensure(&self, x: f64) -> Result<Arc<Z2Data>> {
        if !(x >= 0.0) || x > self.limit {
            return Err(Error::GridCoverage {
                covered: self.limit,
                requested: x,
            });
        }
        let mut guard = self.data.lock().unwrap();
        if guard.x_end() >= x {
            return Ok(guard.clone());
        }
        let have = guard.cells();
        let want_x = x.max(2.0 * guard.x_end()).max(1024.0).min(self.limit);
        let want = (want_x / CELL).ceil() as usize;
        let (values, ints, errs) = evaluate_cells(have, want);
        let mut next = Z2Data::clone(&guard);
        next.values.extend(values);
        next.cell_int.extend(ints);
        next.cell_err.extend(errs);
        let next = Arc::new(next);
        *guard = next.clone();
        drop(guard);
        if let Some(dir) = self.cache_dir.lock().unwrap().clone() {
            write_node_cache(&dir.join(NODE_CACHE_FILE), &next)?;
        }
        Ok(next)
    }
}

/// The process-wide table.
pub fn store() -> &'static Z2Store {
    static STORE: OnceLock<Z2Store> = OnceLock::new();
    STORE.get_or_init(|| Z2Store::new(DEFAULT_LIMIT))
}

fn write_node_cache(path: &Path, data: &Z2Data) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(&NODE_CACHE_MAGIC.to_le_bytes())?;
        w.write_all(&CELL.to_le_bytes())?;
        w.write_all(&(data.cells() as u64).to_le_bytes())?;
        for v in &data.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_node_cache(path: &Path) -> Result<Z2Data> {
    let bad = |reason: &str| Error::Format {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != NODE_CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    r.read_exact(&mut b8)?;
    if f64::from_le_bytes(b8) != CELL {
        return Err(bad("cell width mismatch"));
    }
    r.read_exact(&mut b8)?;
    let cells = u64::from_le_bytes(b8) as usize;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != 8 * 15 * cells {
        return Err(bad("payload length does not match cell count"));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad("non-finite or negative sample"));
    }
    let (cell_int, cell_err): (Vec<f64>, Vec<f64>) = (0..cells)
        .into_par_iter()
        .map(|i| {
            let a = Z2Data::cell_start(i);
            let vals: [f64; 15] = values[15 * i..15 * i + 15].try_into().unwrap();
            cell_quadrature(a, a + CELL, &vals)
        })
        .unzip();
    Ok(Z2Data {
        values,
        cell_int,
        cell_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_quadrature() {
        let s = Z2Store::new(2000.0);
        let d = s.ensure(50.0).unwrap();
        assert!(d.x_end() >= 50.0);
        let g = d.cumulative();
        let i = (50.0 / CELL) as usize;
        let r = integrate(z_squared, 0.0, 50.0, &QuadSpec::with_tol(1e-12).with_osc(2.0)).unwrap();
        assert!((g.prefix[i] - r.value).abs() <= g.err_at(i) + r.abs_err + 1e-12);
        assert!(g.err_at(i) < 1e-9);
    }

    #[test]
    fn coverage_limit() {
        let s = Z2Store::new(100.0);
        assert!(matches!(s.ensure(101.0), Err(Error::GridCoverage { .. })));
        assert!(s.ensure(100.0).unwrap().x_end() >= 100.0);
    }

    #[test]
    fn node_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = Z2Store::new(300.0);
        s.attach_cache(dir.path()).unwrap();
        let d = s.ensure(300.0).unwrap();
        let s2 = Z2Store::new(300.0);
        s2.attach_cache(dir.path()).unwrap();
        let d2 = s2.snapshot();
        assert_eq!(d2.values, d.values);
        assert_eq!(d2.cell_int, d.cell_int);
        fs::write(dir.path().join(NODE_CACHE_FILE), b"junk").unwrap();
        assert!(Z2Store::new(300.0).attach_cache(dir.path()).is_err());
    }
}
