//! On-disk cache of Riesz kernel tables.
//!
//! Each entry is a little-endian binary file `<key>.bin` holding the raw
//! tables and a JSON sidecar `<key>.json` with the metadata used to build
//! them. Loaded tables are the stored bits; nothing is recomputed.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::RadialGrid;
use crate::riesz::{build_kernel, AngularKernel, KernelShape};
use crate::{Error, Result};

pub const CACHE_ENV: &str = "CHOQUARD_CACHE_DIR";
const MAGIC: &[u8; 4] = b"CHQK";
const FORMAT_VERSION: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    #[serde(rename = "N")]
    pub dim: u32,
    pub alpha: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub format_version: u32,
    pub key: String,
}

/// `$CHOQUARD_CACHE_DIR`, else `$HOME/.cache/choquard`.
pub fn default_cache_dir() -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return Some(PathBuf::from(dir));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("choquard"))
}

pub fn cache_key(dim: u32, alpha: f64, grid: &RadialGrid) -> String {
    let mut h = Sha256::new();
    h.update(FORMAT_VERSION.to_le_bytes());
    h.update(dim.to_le_bytes());
    h.update(alpha.to_bits().to_le_bytes());
    h.update(grid.r_min.to_bits().to_le_bytes());
    h.update(grid.r_max.to_bits().to_le_bytes());
    h.update((grid.len() as u64).to_le_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_array(out: &mut Vec<u8>, xs: &[f64]) {
    out.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn write_edges(out: &mut Vec<u8>, edges: &[Vec<(f64, f64)>]) {
    out.extend_from_slice(&(edges.len() as u64).to_le_bytes());
    for e in edges {
        let flat: Vec<f64> = e.iter().flat_map(|&(t, w)| [t, w]).collect();
        write_array(out, &flat);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Parse("truncated kernel cache".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn array(&mut self) -> Result<Vec<f64>> {
        let len = self.u64()? as usize;
        let bytes = self.take(len.checked_mul(8).ok_or_else(|| Error::Parse("bad length".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn edges(&mut self) -> Result<Vec<Vec<(f64, f64)>>> {
        let count = self.u64()? as usize;
        (0..count)
            .map(|_| {
                let flat = self.array()?;
                Ok(flat.chunks_exact(2).map(|c| (c[0], c[1])).collect())
            })
            .collect()
    }
}

pub fn store(dir: &Path, kernel: &AngularKernel) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let key = cache_key(kernel.dim, kernel.alpha, &kernel.grid);
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    write_array(&mut buf, &kernel.minus);
    write_array(&mut buf, &kernel.plus);
    write_edges(&mut buf, &kernel.origin_edge);
    write_edges(&mut buf, &kernel.tail_edge);
    let bin = dir.join(format!("{key}.bin"));
    // write then rename so concurrent readers never see a partial file
    let tmp = dir.join(format!("{key}.bin.tmp{}", std::process::id()));
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, &bin)?;
    let meta = KernelMeta {
        dim: kernel.dim,
        alpha: kernel.alpha,
        r_min: kernel.grid.r_min,
        r_max: kernel.grid.r_max,
        n: kernel.grid.len(),
        format_version: FORMAT_VERSION,
        key: key.clone(),
    };
    crate::io::write_json(&dir.join(format!("{key}.json")), &meta)?;
    Ok(bin)
}

/// Loads a cached kernel, or `Ok(None)` when no entry exists.
pub fn load(dir: &Path, dim: u32, alpha: f64, grid: Arc<RadialGrid>) -> Result<Option<AngularKernel>> {
    let key = cache_key(dim, alpha, &grid);
    let bin = dir.join(format!("{key}.bin"));
    if !bin.exists() {
        return Ok(None);
    }
    let meta: KernelMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{key}.json")))?)?;
    if meta.dim != dim
        || meta.alpha.to_bits() != alpha.to_bits()
        || meta.n != grid.len()
        || meta.r_min.to_bits() != grid.r_min.to_bits()
        || meta.r_max.to_bits() != grid.r_max.to_bits()
    {
        return Err(Error::Parse(format!("kernel cache sidecar {key} does not match its key")));
    }
    let mut buf = Vec::new();
    fs::File::open(&bin)?.read_to_end(&mut buf)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse("not a kernel cache file".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!("kernel cache format {version} unsupported")));
    }
    let minus = r.array()?;
    let plus = r.array()?;
    let origin_edge = r.edges()?;
    let tail_edge = r.edges()?;
    let n = grid.len();
    if minus.len() != 2 * n - 1 || plus.len() != 2 * n - 1 || origin_edge.len() != n || tail_edge.len() != n {
        return Err(Error::Parse("kernel cache has wrong table sizes".into()));
    }
    Ok(Some(AngularKernel {
        dim,
        alpha,
        diagonal_integrable: alpha > 1.0,
        shape: KernelShape::new(dim, alpha)?,
        grid,
        minus,
        plus,
        origin_edge,
        tail_edge,
    }))
}

/// Loads the kernel from `dir` if present, otherwise builds and stores it.
pub fn load_or_build(dir: Option<&Path>, dim: u32, alpha: f64, grid: Arc<RadialGrid>) -> Result<AngularKernel> {
    let Some(dir) = dir else {
        return build_kernel(dim, alpha, grid);
    };
    if let Some(k) = load(dir, dim, alpha, grid.clone())? {
        return Ok(k);
    }
    let k = build_kernel(dim, alpha, grid)?;
    store(dir, &k)?;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn cached_tables_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(make_grid(1e-2, 1e2, 128, 3).unwrap());
        let built = load_or_build(Some(dir.path()), 3, 1.5, g.clone()).unwrap();
        let loaded = load(dir.path(), 3, 1.5, g.clone()).unwrap().expect("entry stored");
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&built.plus), bits(&loaded.plus));
        assert_eq!(bits(&built.minus), bits(&loaded.minus));
        assert_eq!(built.origin_edge, loaded.origin_edge);
        assert_eq!(built.tail_edge, loaded.tail_edge);
        assert!(load(dir.path(), 3, 1.25, g).unwrap().is_none());
    }
}
