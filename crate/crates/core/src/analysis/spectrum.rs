use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, top_singular_values};
use crate::nmf::CoupledDataset;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpectrum {
    pub layer: usize,
    /// Top singular values of `A_layer`, non-increasing.
    pub values: Vec<f64>,
    /// `‖A_layer‖²_F`, the sum of all squared singular values.
    pub total_mass: f64,
}

impl LayerSpectrum {
    /// Fraction of squared singular mass beyond the first `r` values.
    pub fn tail_mass(&self, r: usize) -> f64 {
        tail_mass(&self.values, self.total_mass, r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub label: String,
    pub layers: Vec<LayerSpectrum>,
}

/// `Σ_{i>r} σ_i² / Σ σ_i²`, using `total_mass = Σ σ_i²` over the full
/// spectrum so only the leading `r` values are needed.
pub fn tail_mass(values: &[f64], total_mass: f64, r: usize) -> f64 {
    if total_mass <= 0.0 {
        return 0.0;
    }
    let head: f64 = values.iter().take(r).map(|s| s * s).sum();
    ((total_mass - head) / total_mass).clamp(0.0, 1.0)
}

/// Top-`k` singular values of activation matrix `layer`.
pub fn spectrum<T: Scalar>(
    data: &CoupledDataset<T>,
    layer: usize,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<LayerSpectrum> {
    let a = data
        .activations()
        .get(layer)
        .ok_or_else(|| Error::InvalidArgument(format!("no layer {layer}")))?;
    let values = top_singular_values(a, k, T::from_f64_lossy(tol), max_iter)?;
    Ok(LayerSpectrum {
        layer,
        values: values.into_iter().map(|v| v.to_f64_lossy()).collect(),
        total_mass: frobenius_sq(a).to_f64_lossy(),
    })
}
