//! Binary container for cached per-mesh arrays.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    6 bytes   e.g. "SWEIG1"
//! key     32 bytes   content hash the payload was computed from
//! ndims    u64
//! dims     ndims × u64
//! payload  f64 × (sum of the array lengths implied by the owner)
//! ```
//!
//! The owner of a container decides how `dims` map onto payload arrays.

use std::io::{Read, Write};

use crate::{Error, Result};

pub type CacheKey = [u8; 32];

pub(crate) fn write_header<W: Write>(w: &mut W, magic: &[u8; 6], key: &CacheKey, dims: &[u64]) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(key)?;
    w.write_all(&(dims.len() as u64).to_le_bytes())?;
    for d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, values: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    let mut buf = Vec::new();
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("truncated cache file: {e}"))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads and checks the header; returns the dimensions. A key mismatch is a
/// format error so stale caches are never used silently.
pub(crate) fn read_header<R: Read>(r: &mut R, magic: &[u8; 6], key: Option<&CacheKey>, ndims: usize) -> Result<Vec<usize>> {
    let mut m = [0u8; 6];
    r.read_exact(&mut m).map_err(truncated)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut k = [0u8; 32];
    r.read_exact(&mut k).map_err(truncated)?;
    if let Some(expected) = key {
        if &k != expected {
            return Err(Error::Format("cache key mismatch".into()));
        }
    }
    let n = read_u64(r)?;
    if n as usize != ndims {
        return Err(Error::Format(format!("expected {ndims} dimensions, found {n}")));
    }
    (0..ndims)
        .map(|_| {
            let d = read_u64(r)?;
            usize::try_from(d)
                .ok()
                .filter(|&d| d <= 1 << 40)
                .ok_or_else(|| Error::Format(format!("implausible dimension {d}")))
        })
        .collect()
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Fails unless the reader is exhausted.
pub(crate) fn expect_end<R: Read>(r: &mut R) -> Result<()> {
    let mut b = [0u8; 1];
    match r.read(&mut b) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::Format("trailing bytes after cache payload".into())),
        Err(e) => Err(truncated(e)),
    }
}
