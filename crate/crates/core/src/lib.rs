//! Coupled non-negative factorization of a network's inputs and its layer
//! activations into one shared latent space.
//!
//! The numeric core ([`linalg`], [`nmf`], [`analysis`]) is generic over a
//! [`Scalar`] (`f32` or `f64`). Everything that touches disk is `f64`, and
//! the crate-root aliases pin the default precision used by the pipeline.

pub mod analysis;
pub mod assembly;
pub mod bundle;
pub mod error;
pub mod linalg;
pub mod nmf;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Row-major `f64` matrix, the container used by every on-disk format.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Single-precision matrix, for experiments only (see [`Scalar`]).
pub type Matrix32 = linalg::DenseMatrix<f32>;

pub type Dataset = nmf::CoupledDataset<f64>;
pub type Factors = nmf::FactorSet<f64>;
pub type Fit = nmf::FitResult<f64>;
