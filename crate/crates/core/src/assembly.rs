//! Turns per-image captures into the coupled data matrices: column `k` of
//! every input and activation matrix comes from test image `k`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundle::{write_bundle, BundleManifest, Vectorization};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::nmf::CoupledDataset;
use crate::scalar::Scalar;

/// Everything captured for one test image, already vectorized.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageActivations {
    /// One vector per input channel, pixels in row-major order.
    pub channels: Vec<Vec<f64>>,
    /// One vector per captured layer, channel-major then row then column.
    pub layers: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub regime: serde_json::Value,
    pub test_accuracy: Option<f64>,
    /// `[channels, height, width]`.
    pub input_shape: [usize; 3],
    pub layer_shapes: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationBundle {
    pub images: Vec<ImageActivations>,
    /// Class label of each image, parallel to `images`.
    pub labels: Vec<u32>,
    pub meta: BundleMeta,
}

impl ActivationBundle {
    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn manifest(&self) -> BundleManifest {
        let first = self.images.first();
        let mut m = BundleManifest::with_counts(
            self.images.len(),
            first.map_or(self.meta.input_shape[0], |i| i.channels.len()),
            first.map_or(self.meta.layer_shapes.len(), |i| i.layers.len()),
        );
        m.labels = Some(self.labels.clone());
        m.input_shape = Some(self.meta.input_shape);
        m.layer_shapes = self.meta.layer_shapes.clone();
        m.vectorization = Some(Vectorization::default());
        m.regime = Some(self.meta.regime.clone());
        m.test_accuracy = self.meta.test_accuracy;
        m
    }

    /// Assembles the matrices and writes them as a bundle directory.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let data: CoupledDataset<f64> = build_dataset(self)?;
        write_bundle(dir, &data, &self.manifest())
    }
}

/// Stacks image `k`'s vectors as column `k` of `D_i` and `A_j`.
pub fn build_dataset<T: Scalar>(bundle: &ActivationBundle) -> Result<CoupledDataset<T>> {
    let first = bundle
        .images
        .first()
        .ok_or_else(|| Error::InvalidData("bundle holds no images".into()))?;
    if !bundle.labels.is_empty() && bundle.labels.len() != bundle.images.len() {
        return Err(Error::InvalidData(format!(
            "{} labels for {} images",
            bundle.labels.len(),
            bundle.images.len()
        )));
    }
    let channel_lens: Vec<usize> = first.channels.iter().map(Vec::len).collect();
    let layer_lens: Vec<usize> = first.layers.iter().map(Vec::len).collect();
    for (k, img) in bundle.images.iter().enumerate() {
        let c: Vec<usize> = img.channels.iter().map(Vec::len).collect();
        let l: Vec<usize> = img.layers.iter().map(Vec::len).collect();
        if c != channel_lens || l != layer_lens {
            return Err(Error::InvalidData(format!(
                "image {k} has vector lengths {c:?}/{l:?}, image 0 has {channel_lens:?}/{layer_lens:?}"
            )));
        }
    }
    let stack = |pick: &dyn Fn(&ImageActivations) -> &[f64]| -> Result<DenseMatrix<T>> {
        let columns: Vec<Vec<T>> = bundle
            .images
            .iter()
            .map(|img| pick(img).iter().map(|&v| T::from_f64_lossy(v)).collect())
            .collect();
        DenseMatrix::from_columns(&columns)
    };
    let inputs = (0..channel_lens.len())
        .map(|i| stack(&|img| &img.channels[i]))
        .collect::<Result<_>>()?;
    let activations = (0..layer_lens.len())
        .map(|j| stack(&|img| &img.layers[j]))
        .collect::<Result<_>>()?;
    CoupledDataset::new(inputs, activations)
}
