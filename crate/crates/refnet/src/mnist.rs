//! IDX reader for the MNIST distribution files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{RefnetError, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images scaled to `[0, 1]`, one row-major `rows × cols` block per image.
#[derive(Clone, Debug, PartialEq)]
pub struct MnistSplit {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
}

impl MnistSplit {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.images[i * n..(i + 1) * n]
    }
}

#[derive(Clone, Debug)]
pub struct Mnist {
    pub train: MnistSplit,
    pub test: MnistSplit,
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| RefnetError::Idx {
            path: path.to_path_buf(),
            offset: bytes.len(),
            reason: format!("truncated header, needed 4 bytes at offset {offset}"),
        })
}

fn header(bytes: &[u8], magic: u32, ndims: usize, path: &Path) -> Result<Vec<usize>> {
    let found = be_u32(bytes, 0, path)?;
    if found != magic {
        return Err(RefnetError::Idx {
            path: path.to_path_buf(),
            offset: 0,
            reason: format!("bad magic {found:#010x}, expected {magic:#010x}"),
        });
    }
    (0..ndims)
        .map(|d| be_u32(bytes, 4 + 4 * d, path).map(|v| v as usize))
        .collect()
}

fn payload<'a>(bytes: &'a [u8], start: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    let end = start + len;
    if bytes.len() < end {
        return Err(RefnetError::Idx {
            path: path.to_path_buf(),
            offset: bytes.len(),
            reason: format!("truncated payload, expected {end} bytes"),
        });
    }
    Ok(&bytes[start..end])
}

/// Parses an `idx3-ubyte` image file. Returns `(rows, cols, pixels)` with
/// pixels scaled by `1/255`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let dims = header(bytes, IMAGE_MAGIC, 3, path)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let raw = payload(bytes, 16, n * rows * cols, path)?;
    Ok((rows, cols, raw.iter().map(|&b| f64::from(b) / 255.0).collect()))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let dims = header(bytes, LABEL_MAGIC, 1, path)?;
    Ok(payload(bytes, 8, dims[0], path)?.to_vec())
}

fn find(dir: &Path, stem: &str, kind: &str) -> PathBuf {
    let dashed = dir.join(format!("{stem}-{kind}"));
    let dotted = dir.join(format!("{stem}.{kind}"));
    if !dashed.exists() && dotted.exists() {
        dotted
    } else {
        dashed
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| RefnetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_split(dir: &Path, prefix: &str) -> Result<MnistSplit> {
    let img_path = find(dir, &format!("{prefix}-images"), "idx3-ubyte");
    let lbl_path = find(dir, &format!("{prefix}-labels"), "idx1-ubyte");
    let (rows, cols, images) = parse_idx_images(&read(&img_path)?, &img_path)?;
    let labels = parse_idx_labels(&read(&lbl_path)?, &lbl_path)?;
    let count = images.len() / (rows * cols).max(1);
    if count != labels.len() {
        return Err(RefnetError::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(MnistSplit {
        rows,
        cols,
        images,
        labels,
    })
}

/// Loads the four standard files (`train-images-idx3-ubyte`, ...,
/// `t10k-labels-idx1-ubyte`; dotted names are accepted too) from `dir`.
pub fn load_mnist(dir: &Path) -> Result<Mnist> {
    Ok(Mnist {
        train: load_split(dir, "train")?,
        test: load_split(dir, "t10k")?,
    })
}
