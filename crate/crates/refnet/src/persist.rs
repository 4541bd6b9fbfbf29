//! Parameters on disk: one FLM1 matrix per block, named after the block.

use std::fs;
use std::path::Path;

use factorlens::linalg::{read_flm1, write_flm1, DenseMatrix};

use crate::error::{RefnetError, Result};
use crate::net::RefNetParams;

pub fn write_params(dir: &Path, params: &RefNetParams) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| RefnetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let names = RefNetParams::block_names();
    let shapes = RefNetParams::block_shapes();
    for ((name, (rows, cols)), block) in names.iter().zip(shapes).zip(params.blocks()) {
        let m = DenseMatrix::new(rows, cols, block.clone())?;
        write_flm1(dir.join(format!("{name}.flm")), &m)?;
    }
    Ok(())
}

pub fn read_params(dir: &Path) -> Result<RefNetParams> {
    let mut params = RefNetParams::zeros();
    let names = RefNetParams::block_names();
    let shapes = RefNetParams::block_shapes();
    for ((name, shape), block) in names.iter().zip(shapes).zip(params.blocks_mut()) {
        let path = dir.join(format!("{name}.flm"));
        let m: DenseMatrix<f64> = read_flm1(&path)?;
        if m.shape() != shape {
            return Err(factorlens::Error::Format {
                path,
                reason: format!("expected {}x{}, found {}x{}", shape.0, shape.1, m.rows(), m.cols()),
            }
            .into());
        }
        *block = m.into_vec();
    }
    if !params.all_finite() {
        return Err(factorlens::Error::InvalidData(format!("{}: non-finite parameters", dir.display())).into());
    }
    Ok(params)
}
