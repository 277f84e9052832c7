//! Divisor-function tables.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Largest table the sieve will build.
pub const MAX_LIMIT: u64 = 100_000_000;

/// Default memory budget for a table (four bytes per entry at [`MAX_LIMIT`]).
pub const DEFAULT_BUDGET_BYTES: u64 = 4 * MAX_LIMIT;

/// Magic number opening a divisor cache file ("MZD1" read as a little-endian u32).
pub const CACHE_MAGIC: u32 = 0x4D5A_4431;

/// d(n) for 1 <= n <= limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTable {
    limit: usize,
    // d[0] is unused and kept at zero so that d[n] is d(n)
    d: Vec<u32>,
}

impl DivisorTable {
    pub fn limit(&self) -> usize {
        self.limit
    }

    /// d(n); panics when n is 0 or beyond the table.
    #[inline]
    pub fn get(&self, n: usize) -> u32 {
        assert!(
            n >= 1 && n <= self.limit,
            "d({n}) outside table of limit {}",
            self.limit
        );
        self.d[n]
    }

    /// d(1), ..., d(limit).
    pub fn values(&self) -> &[u32] {
        &self.d[1..]
    }

    /// Σ_{n <= x} d(n).
    pub fn summatory(&self, x: usize) -> u64 {
        self.d[1..=x.min(self.limit)].iter().map(|&v| v as u64).sum()
    }

    pub fn ensure_covers(&self, n: usize) -> Result<()> {
        if n > self.limit {
            return Err(Error::Capacity {
                requested: n as u64,
                limit: self.limit as u64,
            });
        }
        Ok(())
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(&CACHE_MAGIC.to_le_bytes())?;
        w.write_all(&(self.limit as u64).to_le_bytes())?;
        for &v in self.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let mut r = BufReader::new(fs::File::open(path)?);
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CACHE_MAGIC {
            return Err(bad("bad magic"));
        }
        r.read_exact(&mut b8)?;
        let limit = u64::from_le_bytes(b8);
        if limit == 0 || limit > MAX_LIMIT {
            return Err(bad("n_max out of range"));
        }
        let limit = limit as usize;
        let mut raw = Vec::with_capacity(4 * limit);
        r.read_to_end(&mut raw)?;
        if raw.len() != 4 * limit {
            return Err(bad("payload length does not match n_max"));
        }
        let mut d = Vec::with_capacity(limit + 1);
        d.push(0);
        d.extend(
            raw.chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        Ok(DivisorTable { limit, d })
    }
}

/// Exact d(n) for n <= n_max by counting over multiples.
pub fn divisor_sieve(n_max: u64) -> Result<DivisorTable> {
    divisor_sieve_with_budget(n_max, DEFAULT_BUDGET_BYTES)
}

pub fn divisor_sieve_with_budget(n_max: u64, budget_bytes: u64) -> Result<DivisorTable> {
    if n_max == 0 {
        return Err(Error::domain("divisor table needs n_max >= 1"));
    }
    let limit_by_budget = budget_bytes / 4;
    if n_max > MAX_LIMIT || n_max > limit_by_budget {
        return Err(Error::Capacity {
            requested: n_max,
            limit: MAX_LIMIT.min(limit_by_budget),
        });
    }
    let n = n_max as usize;
    let mut d = vec![0u32; n + 1];
    for k in 1..=n {
        for m in (k..=n).step_by(k) {
            d[m] += 1;
        }
    }
    Ok(DivisorTable { limit: n, d })
}

pub fn cache_path(dir: &Path, n_max: u64) -> PathBuf {
    dir.join(format!("divisors_{n_max}.bin"))
}

/// Loads the table for `n_max` from `dir`, building and storing it on a miss.
pub fn load_or_build(dir: &Path, n_max: u64) -> Result<DivisorTable> {
    let path = cache_path(dir, n_max);
    if let Ok(t) = DivisorTable::read_cache(&path) {
        if t.limit as u64 == n_max {
            return Ok(t);
        }
    }
    let t = divisor_sieve(n_max)?;
    fs::create_dir_all(dir)?;
    t.write_cache(&path)?;
    Ok(t)
}
