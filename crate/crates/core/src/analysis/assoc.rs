use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nmf::FactorSet;
use crate::scalar::Scalar;

/// Per factor, the share of its image weight (`Σ_k F[k, r]`) carried by
/// each class label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub classes: usize,
    /// `weights[r][c]`, each row sums to 1 (or is all zero).
    pub weights: Vec<Vec<f64>>,
}

impl Association {
    /// Classes of factor `r` ordered by decreasing weight.
    pub fn ranked_classes(&self, r: usize) -> Vec<(u32, f64)> {
        let mut v: Vec<(u32, f64)> = self.weights[r]
            .iter()
            .enumerate()
            .map(|(c, &w)| (c as u32, w))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Factor with the largest weight on `class`.
    pub fn dominant_factor(&self, class: u32) -> Option<usize> {
        let c = class as usize;
        if c >= self.classes {
            return None;
        }
        (0..self.weights.len()).max_by(|&a, &b| self.weights[a][c].total_cmp(&self.weights[b][c]).then(b.cmp(&a)))
    }
}

/// Label distribution of each factor, weighted by the factor's loading on
/// every image. `labels[k]` is the class of image (row) `k` of `F`; the
/// number of classes is the largest label plus one.
pub fn factor_digit_association<T: Scalar>(
    factors: &FactorSet<T>,
    labels: &[u32],
) -> Result<Association> {
    let f = &factors.shared;
    if labels.len() != f.rows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} images",
            labels.len(),
            f.rows()
        )));
    }
    let classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut weights = vec![vec![0.0; classes]; f.cols()];
    for (k, &label) in labels.iter().enumerate() {
        for (r, w) in weights.iter_mut().enumerate() {
            w[label as usize] += f[(k, r)].to_f64_lossy();
        }
    }
    for w in &mut weights {
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|v| *v /= total);
        }
    }
    Ok(Association { classes, weights })
}
