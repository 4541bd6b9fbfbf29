use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nmf::{fit, CoupledDataset, FitResult, SolverConfig};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub rank: usize,
    /// Best RMSE over the restarts.
    pub rmse: f64,
    pub objective: f64,
    /// Seed of the best restart.
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub label: String,
    /// Strictly increasing in rank.
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn rmse_at(&self, rank: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.rank == rank).map(|e| e.rmse)
    }
}

/// Fits every rank with `restarts` seeds (`base.seed`, `base.seed + 1`, ...)
/// and keeps the lowest objective per rank. Ranks are sorted and
/// deduplicated. Up to `jobs` fits run concurrently; the report does not
/// depend on `jobs`.
pub fn rank_sweep<T: Scalar>(
    data: &CoupledDataset<T>,
    label: &str,
    ranks: &[usize],
    restarts: usize,
    base: &SolverConfig,
    jobs: usize,
) -> Result<SweepReport> {
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "ranks must be a non-empty list of positive integers, got {ranks:?}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let mut ranks = ranks.to_vec();
    ranks.sort_unstable();
    ranks.dedup();

    let tasks: Vec<(usize, u64)> = ranks
        .iter()
        .flat_map(|&r| (0..restarts as u64).map(move |s| (r, base.seed.wrapping_add(s))))
        .collect();
    let results: Vec<Mutex<Option<Result<FitResult<T>>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let idx = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(rank, seed)) = tasks.get(idx) else {
            break;
        };
        let cfg = SolverConfig {
            rank,
            seed,
            ..base.clone()
        };
        *results[idx].lock().unwrap() = Some(fit(data, &cfg));
    };
    let jobs = jobs.clamp(1, tasks.len());
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }

    let mut fits = results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every task ran"));
    let mut entries = Vec::with_capacity(ranks.len());
    for &rank in &ranks {
        let mut best: Option<FitResult<T>> = None;
        let mut seeds = Vec::with_capacity(restarts);
        for _ in 0..restarts {
            let result = fits.next().expect("one result per task")?;
            seeds.push(result.seed);
            if best
                .as_ref()
                .map_or(true, |b| result.final_objective() < b.final_objective())
            {
                best = Some(result);
            }
        }
        let best = best.expect("restarts >= 1");
        entries.push(SweepEntry {
            rank,
            rmse: best.rmse.to_f64_lossy(),
            objective: best.final_objective().to_f64_lossy(),
            seed: best.seed,
            seeds,
            iterations: best.iterations_run,
            converged: best.converged,
        });
    }
    Ok(SweepReport {
        label: label.to_string(),
        entries,
    })
}
