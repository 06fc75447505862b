//! Binary kernel cache. Layout (little endian): magic `FGLK`, u32 version,
//! u32 dim, f64 h, f64 s, u32 near_radius, f64 quad_tol, u32 count, then
//! `count` f64 unit-spacing near weights.

use std::fs;
use std::path::{Path, PathBuf};

use super::kernel::{build_kernel, KernelTable};
use crate::error::{Error, Result};
use crate::lattice::Lattice;

pub const CACHE_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"FGLK";

pub fn save_kernel(kern: &KernelTable, path: &Path) -> Result<()> {
    let near = kern.unit_near();
    let mut buf = Vec::with_capacity(48 + 8 * near.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(kern.lattice().dim() as u32).to_le_bytes());
    buf.extend_from_slice(&kern.lattice().h().to_le_bytes());
    buf.extend_from_slice(&kern.s().to_le_bytes());
    buf.extend_from_slice(&(kern.near_radius() as u32).to_le_bytes());
    buf.extend_from_slice(&kern.quad_tol().to_le_bytes());
    buf.extend_from_slice(&(near.len() as u32).to_le_bytes());
    for w in near {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Cache("truncated kernel cache".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Loads a cached table, checking that its key matches the request.
pub fn load_kernel(path: &Path, lattice: &Lattice, s: f64, near_radius: usize, quad_tol: f64) -> Result<KernelTable> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let key = (r.u32()? as usize, r.f64()?, r.f64()?, r.u32()? as usize, r.f64()?);
    let want = (lattice.dim(), lattice.h(), s, near_radius, quad_tol);
    if key != want {
        return Err(Error::Cache(format!("cache key {key:?} does not match {want:?}")));
    }
    let count = r.u32()? as usize;
    let near = (0..count).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Cache("trailing bytes in kernel cache".into()));
    }
    KernelTable::from_unit_near(lattice, s, near_radius, quad_tol, near)
}

pub fn cache_path(dir: &Path, lattice: &Lattice, s: f64, near_radius: usize, quad_tol: f64) -> PathBuf {
    dir.join(format!(
        "kernel_d{}_h{:016x}_s{:016x}_r{}_t{:016x}.bin",
        lattice.dim(),
        lattice.h().to_bits(),
        s.to_bits(),
        near_radius,
        quad_tol.to_bits()
    ))
}

/// Uses the cached near table under `dir` if present and valid, else builds and stores it.
pub fn load_or_build_kernel(
    dir: &Path,
    lattice: &Lattice,
    s: f64,
    near_radius: usize,
    quad_tol: f64,
) -> Result<KernelTable> {
    let path = cache_path(dir, lattice, s, near_radius, quad_tol);
    if path.exists() {
        if let Ok(k) = load_kernel(&path, lattice, s, near_radius, quad_tol) {
            return Ok(k);
        }
    }
    let kern = build_kernel(lattice, s, near_radius, quad_tol)?;
    fs::create_dir_all(dir)?;
    save_kernel(&kern, &path)?;
    Ok(kern)
}
