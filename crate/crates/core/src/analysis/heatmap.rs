use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nmf::FactorSet;
use crate::scalar::Scalar;

/// Neurons × factors participation grid, each row scaled by its maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, every value in [0, 1].
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn column_max(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, c)).fold(0.0, f64::max)
    }

    /// Number of factor columns whose largest participation exceeds
    /// `threshold`.
    pub fn active_factors(&self, threshold: f64) -> usize {
        (0..self.cols)
            .filter(|&c| self.column_max(c) > threshold)
            .count()
    }
}

/// Row-normalized `O_layer`. Rows that are zero stay zero (dead neurons).
pub fn neuron_heatmap<T: Scalar>(factors: &FactorSet<T>, layer: usize) -> Result<Heatmap> {
    let o = factors
        .layer_factors
        .get(layer)
        .ok_or_else(|| Error::InvalidArgument(format!("no layer {layer}")))?;
    let (rows, cols) = o.shape();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let row: Vec<f64> = o.row(r).iter().map(|v| v.to_f64_lossy().max(0.0)).collect();
        let max = row.iter().copied().fold(0.0, f64::max);
        values.extend(row.iter().map(|&v| if max > 0.0 { v / max } else { 0.0 }));
    }
    Ok(Heatmap { rows, cols, values })
}
