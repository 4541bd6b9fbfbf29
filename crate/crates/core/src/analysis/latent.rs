use crate::error::{Error, Result};
use crate::nmf::FactorSet;
use crate::scalar::Scalar;

/// Grayscale image with values in [0, 1], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// One image per latent factor: column `r` of `P_channel`, min-max scaled
/// and reshaped row-major to `height × width`. A constant column becomes
/// uniform 0.5 gray.
pub fn latent_images<T: Scalar>(
    factors: &FactorSet<T>,
    channel: usize,
    height: usize,
    width: usize,
) -> Result<Vec<GrayImage>> {
    let p = factors
        .input_factors
        .get(channel)
        .ok_or_else(|| Error::InvalidArgument(format!("no input channel {channel}")))?;
    if p.rows() != height * width {
        return Err(Error::shape("latent_images", p.shape(), (height * width, p.cols())));
    }
    Ok((0..p.cols())
        .map(|r| {
            let column: Vec<f64> = p.column(r).into_iter().map(|v| v.to_f64_lossy()).collect();
            let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pixels = if hi > lo {
                column.iter().map(|v| (v - lo) / (hi - lo)).collect()
            } else {
                vec![0.5; column.len()]
            };
            GrayImage {
                width,
                height,
                pixels,
            }
        })
        .collect())
}
