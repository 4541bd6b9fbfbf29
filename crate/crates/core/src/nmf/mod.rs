//! Coupled non-negative factorization.
//!
//! Input channels `D_i` and layer activations `A_j` share the per-image
//! factor `F`:
//!
//! ```text
//! J = Σ_i ‖D_i − P_i Fᵀ‖²_F + Σ_j ‖A_j − O_j Fᵀ‖²_F,   P_i, O_j, F ≥ 0
//! ```
//!
//! `P_i` holds one latent row per pixel, `O_j` one per neuron and `F` one
//! per image. The solver alternates multiplicative updates, which keep all
//! factors non-negative and never increase `J` (up to the stabilizer).

mod persist;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub use persist::{read_factors, read_fit_summary, write_fit, FitSummary};
pub use solver::{
    fit, fit_best_of, gradient, init_factors, objective, rmse, rmse_from_objective,
    update_input_factor, update_layer_factor, update_shared, FactorGradients,
};

/// Input channel matrices and layer activation matrices over the same `T`
/// images (one column per image).
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledDataset<T> {
    inputs: Vec<DenseMatrix<T>>,
    activations: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> CoupledDataset<T> {
    /// Requires at least one matrix on each side, a common column count and
    /// finite non-negative entries.
    pub fn new(inputs: Vec<DenseMatrix<T>>, activations: Vec<DenseMatrix<T>>) -> Result<Self> {
        if inputs.is_empty() || activations.is_empty() {
            return Err(Error::InvalidData(format!(
                "need at least one input channel and one layer, got {} and {}",
                inputs.len(),
                activations.len()
            )));
        }
        let t = inputs[0].cols();
        for (kind, list) in [("input", &inputs), ("activation", &activations)] {
            for (idx, m) in list.iter().enumerate() {
                if m.cols() != t {
                    return Err(Error::InvalidData(format!(
                        "{kind} matrix {idx} has {} columns, expected {t}",
                        m.cols()
                    )));
                }
                if let Some(bad) = m.as_slice().iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
                    return Err(Error::InvalidData(format!(
                        "{kind} matrix {idx} contains {bad}; entries must be finite and non-negative"
                    )));
                }
            }
        }
        Ok(Self { inputs, activations })
    }

    pub fn inputs(&self) -> &[DenseMatrix<T>] {
        &self.inputs
    }

    pub fn activations(&self) -> &[DenseMatrix<T>] {
        &self.activations
    }

    /// Number of images `T`.
    pub fn columns(&self) -> usize {
        self.inputs[0].cols()
    }

    /// Total entry count across every data matrix.
    pub fn total_entries(&self) -> usize {
        self.inputs
            .iter()
            .chain(&self.activations)
            .map(|m| m.len())
            .sum()
    }

    pub fn cast<U: Scalar>(&self) -> CoupledDataset<U> {
        CoupledDataset {
            inputs: self.inputs.iter().map(DenseMatrix::cast).collect(),
            activations: self.activations.iter().map(DenseMatrix::cast).collect(),
        }
    }
}

/// Non-negative factors of one rank-`k` fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSet<T> {
    /// `P_i`: pixels × k, one per input channel.
    pub input_factors: Vec<DenseMatrix<T>>,
    /// `O_j`: neurons × k, one per layer.
    pub layer_factors: Vec<DenseMatrix<T>>,
    /// `F`: images × k.
    pub shared: DenseMatrix<T>,
}

impl<T: Scalar> FactorSet<T> {
    pub fn rank(&self) -> usize {
        self.shared.cols()
    }

    pub fn all_nonnegative(&self) -> bool {
        self.input_factors
            .iter()
            .chain(&self.layer_factors)
            .chain(std::iter::once(&self.shared))
            .all(DenseMatrix::all_nonnegative)
    }

    /// Checks every factor against the dataset's dimensions.
    pub fn check_against(&self, data: &CoupledDataset<T>) -> Result<()> {
        let k = self.rank();
        if self.shared.rows() != data.columns() {
            return Err(Error::shape(
                "shared factor",
                self.shared.shape(),
                (data.columns(), k),
            ));
        }
        if self.input_factors.len() != data.inputs().len()
            || self.layer_factors.len() != data.activations().len()
        {
            return Err(Error::InvalidArgument(format!(
                "factor set has {}+{} blocks, dataset has {}+{}",
                self.input_factors.len(),
                self.layer_factors.len(),
                data.inputs().len(),
                data.activations().len()
            )));
        }
        let pairs = self
            .input_factors
            .iter()
            .zip(data.inputs())
            .chain(self.layer_factors.iter().zip(data.activations()));
        for (factor, m) in pairs {
            if factor.shape() != (m.rows(), k) {
                return Err(Error::shape("loading factor", factor.shape(), (m.rows(), k)));
            }
        }
        Ok(())
    }
}

/// Solver settings. Defaults: ε = 1e-9, relative tolerance 1e-6 per sweep,
/// at most 500 sweeps, uniform initialization on (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub max_iter: usize,
    pub eps: f64,
    pub rel_tol: f64,
    pub seed: u64,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            max_iter: 500,
            eps: 1e-9,
            rel_tol: 1e-6,
            seed: 0,
            init_low: 0.0,
            init_high: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_rank(rank: usize) -> Self {
        Self {
            rank,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol must be non-negative, got {}",
                self.rel_tol
            )));
        }
        if !(0.0 <= self.init_low && self.init_low < self.init_high && self.init_high.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "init interval ({}, {}) must be a non-empty non-negative range",
                self.init_low, self.init_high
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<T> {
    pub factors: FactorSet<T>,
    /// `J` after every full sweep (F, then each P_i, then each O_j).
    pub objective_trace: Vec<T>,
    pub initial_objective: T,
    pub iterations_run: usize,
    pub converged: bool,
    pub rmse: T,
    /// Seed that produced this fit.
    pub seed: u64,
}

impl<T: Scalar> FitResult<T> {
    pub fn final_objective(&self) -> T {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }
}
