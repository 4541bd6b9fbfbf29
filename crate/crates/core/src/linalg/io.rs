//! `FLM1` matrix files: the ASCII magic `FLM1`, then `rows` and `cols` as
//! little-endian `u64`, then `rows * cols` little-endian `f64` values in
//! row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::DenseMatrix;

pub const FLM1_MAGIC: &[u8; 4] = b"FLM1";

const HEADER_LEN: usize = 4 + 8 + 8;

pub fn write_flm1_to<T: Scalar, W: Write>(m: &DenseMatrix<T>, mut w: W) -> std::io::Result<()> {
    w.write_all(FLM1_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()
}

pub fn write_flm1<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_flm1_to(m, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses an `FLM1` payload. `origin` only labels errors.
pub fn read_flm1_from<T: Scalar, R: Read>(mut r: R, origin: &Path) -> Result<DenseMatrix<T>> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(origin, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != FLM1_MAGIC {
        return Err(bad(format!("bad magic {:?}, expected \"FLM1\"", &bytes[..4])));
    }
    let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let (rows, cols) = (read_u64(4), read_u64(12));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| bad(format!("dimensions {rows}x{cols} overflow")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(bad(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(bad(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| bad(e.to_string()))
}

pub fn read_flm1<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_flm1_from(BufReader::new(file), path)
}
