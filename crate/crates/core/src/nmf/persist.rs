//! On-disk layout of a fit: one `FLM1` file per factor plus `fit.json`
//! with the objective trace and solver settings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{read_flm1, write_flm1, DenseMatrix};
use crate::scalar::Scalar;

use super::{FactorSet, FitResult, SolverConfig};

pub const FIT_SUMMARY_FILE: &str = "fit.json";
const SHARED_FILE: &str = "shared.flm";

fn input_file(i: usize) -> String {
    format!("input_factor_{i}.flm")
}

fn layer_file(j: usize) -> String {
    format!("layer_factor_{j}.flm")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rank: usize,
    pub seed: u64,
    pub iterations_run: usize,
    pub converged: bool,
    pub rmse: f64,
    pub initial_objective: f64,
    pub objective_trace: Vec<f64>,
    pub config: SolverConfig,
    pub input_factors: Vec<String>,
    pub layer_factors: Vec<String>,
    pub shared: String,
}

/// Writes `result` into `dir` (created if missing).
pub fn write_fit<T: Scalar>(dir: &Path, result: &FitResult<T>, config: &SolverConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let f = &result.factors;
    let mut summary = FitSummary {
        rank: f.rank(),
        seed: result.seed,
        iterations_run: result.iterations_run,
        converged: result.converged,
        rmse: result.rmse.to_f64_lossy(),
        initial_objective: result.initial_objective.to_f64_lossy(),
        objective_trace: result.objective_trace.iter().map(|v| v.to_f64_lossy()).collect(),
        config: SolverConfig {
            seed: result.seed,
            ..config.clone()
        },
        input_factors: Vec::new(),
        layer_factors: Vec::new(),
        shared: SHARED_FILE.to_string(),
    };
    for (i, p) in f.input_factors.iter().enumerate() {
        write_flm1(dir.join(input_file(i)), p)?;
        summary.input_factors.push(input_file(i));
    }
    for (j, o) in f.layer_factors.iter().enumerate() {
        write_flm1(dir.join(layer_file(j)), o)?;
        summary.layer_factors.push(layer_file(j));
    }
    write_flm1(dir.join(SHARED_FILE), &f.shared)?;
    let path = dir.join(FIT_SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_fit_summary(dir: &Path) -> Result<FitSummary> {
    let path = dir.join(FIT_SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
}

pub fn read_factors<T: Scalar>(dir: &Path) -> Result<FactorSet<T>> {
    let summary = read_fit_summary(dir)?;
    let load = |name: &String| -> Result<DenseMatrix<T>> { read_flm1(dir.join(name)) };
    let factors = FactorSet {
        input_factors: summary.input_factors.iter().map(load).collect::<Result<_>>()?,
        layer_factors: summary.layer_factors.iter().map(load).collect::<Result<_>>()?,
        shared: load(&summary.shared)?,
    };
    if factors.rank() != summary.rank {
        return Err(Error::Format {
            path: dir.join(FIT_SUMMARY_FILE),
            reason: format!("rank {} but shared factor has {} columns", summary.rank, factors.rank()),
        });
    }
    Ok(factors)
}
