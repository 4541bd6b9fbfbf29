//! Bundle directories: `manifest.json` plus one `FLM1` file per data matrix.
//!
//! The manifest lists input-channel matrices in channel order and
//! activation matrices in layer order, together with the shared column
//! count `t`. Everything else in it is optional metadata, so externally
//! produced bundles only need the three required keys.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{read_flm1, write_flm1};
use crate::nmf::CoupledDataset;
use crate::scalar::Scalar;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_FORMAT: &str = "factorlens-bundle/1";

/// Pixel order inside a column of an input matrix.
pub const PIXEL_ORDER: &str = "row-major: row, then column";
/// Neuron order inside a column of an activation matrix.
pub const ACTIVATION_ORDER: &str = "channel-major: channel, then row, then column";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vectorization {
    pub pixels: String,
    pub activations: String,
}

impl Default for Vectorization {
    fn default() -> Self {
        Self {
            pixels: PIXEL_ORDER.into(),
            activations: ACTIVATION_ORDER.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    #[serde(default = "default_format")]
    pub format: String,
    /// Number of images (columns of every matrix).
    pub t: usize,
    pub inputs: Vec<String>,
    pub activations: Vec<String>,
    /// Class label per column, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
    /// `[channels, height, width]` of the input images.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_shape: Option<[usize; 3]>,
    /// `[channels, height, width]` of each captured layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layer_shapes: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectorization: Option<Vectorization>,
    /// Free-form description of how the producing network was trained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

fn default_format() -> String {
    BUNDLE_FORMAT.to_string()
}

impl BundleManifest {
    /// Manifest with the conventional file names for `c` channels and `l`
    /// layers.
    pub fn with_counts(t: usize, c: usize, l: usize) -> Self {
        Self {
            format: default_format(),
            t,
            inputs: (0..c).map(|i| format!("input_{i}.flm")).collect(),
            activations: (0..l).map(|j| format!("activation_{j}.flm")).collect(),
            labels: None,
            input_shape: None,
            layer_shapes: Vec::new(),
            vectorization: Some(Vectorization::default()),
            regime: None,
            test_accuracy: None,
        }
    }
}

/// Writes the dataset's matrices under the names in `manifest`, then the
/// manifest itself.
pub fn write_bundle<T: Scalar>(
    dir: &Path,
    data: &CoupledDataset<T>,
    manifest: &BundleManifest,
) -> Result<()> {
    if manifest.inputs.len() != data.inputs().len()
        || manifest.activations.len() != data.activations().len()
        || manifest.t != data.columns()
    {
        return Err(Error::InvalidArgument(format!(
            "manifest ({} inputs, {} activations, t={}) does not describe dataset ({}, {}, t={})",
            manifest.inputs.len(),
            manifest.activations.len(),
            manifest.t,
            data.inputs().len(),
            data.activations().len(),
            data.columns()
        )));
    }
    if let Some(labels) = &manifest.labels {
        if labels.len() != manifest.t {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} columns",
                labels.len(),
                manifest.t
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, m) in manifest.inputs.iter().zip(data.inputs()) {
        write_flm1(dir.join(name), m)?;
    }
    for (name, m) in manifest.activations.iter().zip(data.activations()) {
        write_flm1(dir.join(name), m)?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<BundleManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}

/// Reads a bundle directory into a dataset. Matrix paths in the manifest
/// are resolved relative to `dir`.
pub fn read_bundle<T: Scalar>(dir: &Path) -> Result<(CoupledDataset<T>, BundleManifest)> {
    let manifest = read_manifest(dir)?;
    let load = |names: &[String]| -> Result<Vec<_>> {
        names.iter().map(|n| read_flm1::<T>(dir.join(n))).collect()
    };
    let data = CoupledDataset::new(load(&manifest.inputs)?, load(&manifest.activations)?)?;
    let bad = |reason: String| Error::Format {
        path: dir.join(MANIFEST_FILE),
        reason,
    };
    if data.columns() != manifest.t {
        return Err(bad(format!(
            "manifest declares t={} but matrices have {} columns",
            manifest.t,
            data.columns()
        )));
    }
    if let Some(labels) = &manifest.labels {
        if labels.len() != manifest.t {
            return Err(bad(format!("{} labels for t={}", labels.len(), manifest.t)));
        }
    }
    Ok((data, manifest))
}
