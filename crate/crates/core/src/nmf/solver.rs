use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    hadamard_div_stabilized, hadamard_mul, matmul, matmul_nt, matmul_tn, DenseMatrix,
};
use crate::scalar::Scalar;

use super::{CoupledDataset, FactorSet, FitResult, SolverConfig};

/// Squared reconstruction error `‖X − L Fᵀ‖²`.
fn block_error<T: Scalar>(
    x: &DenseMatrix<T>,
    loading: &DenseMatrix<T>,
    shared: &DenseMatrix<T>,
) -> Result<T> {
    let model = matmul_nt(loading, shared)?;
    Ok(x.as_slice()
        .iter()
        .zip(model.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

fn blocks<'a, T>(
    data: &'a CoupledDataset<T>,
    factors: &'a FactorSet<T>,
) -> impl Iterator<Item = (&'a DenseMatrix<T>, &'a DenseMatrix<T>)> {
    data.inputs
        .iter()
        .zip(&factors.input_factors)
        .chain(data.activations.iter().zip(&factors.layer_factors))
}

/// The coupled objective `J`.
pub fn objective<T: Scalar>(data: &CoupledDataset<T>, factors: &FactorSet<T>) -> Result<T> {
    factors.check_against(data)?;
    blocks(data, factors).try_fold(T::zero(), |acc, (x, l)| {
        Ok(acc + block_error(x, l, &factors.shared)?)
    })
}

/// Uniform random factors on the configured open interval; `F` is drawn
/// first, then each `P_i`, then each `O_j`.
pub fn init_factors<T: Scalar>(
    data: &CoupledDataset<T>,
    config: &SolverConfig,
) -> Result<FactorSet<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = (config.init_low, config.init_high);
    let k = config.rank;
    let mut draw = |rows: usize| {
        DenseMatrix::from_fn(rows, k, |_, _| loop {
            let v = lo + (hi - lo) * rng.gen::<f64>();
            if v > lo {
                break T::from_f64_lossy(v);
            }
        })
    };
    let shared = draw(data.columns());
    let input_factors = data.inputs.iter().map(|d| draw(d.rows())).collect();
    let layer_factors = data.activations.iter().map(|a| draw(a.rows())).collect();
    Ok(FactorSet {
        input_factors,
        layer_factors,
        shared,
    })
}

fn check_eps<T: Scalar>(eps: T) -> Result<()> {
    if eps > T::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")))
    }
}

/// `F ← F ∘ (Σ D_iᵀP_i + Σ A_jᵀO_j) ⊘ (F (Σ P_iᵀP_i + Σ O_jᵀO_j) + ε)`.
pub fn update_shared<T: Scalar>(
    data: &CoupledDataset<T>,
    factors: &FactorSet<T>,
    eps: T,
) -> Result<DenseMatrix<T>> {
    factors.check_against(data)?;
    check_eps(eps)?;
    let k = factors.rank();
    let mut num = DenseMatrix::zeros(data.columns(), k);
    let mut gram = DenseMatrix::zeros(k, k);
    for (x, loading) in blocks(data, factors) {
        num.add_assign(&matmul_tn(x, loading)?)?;
        gram.add_assign(&matmul_tn(loading, loading)?)?;
    }
    let den = matmul(&factors.shared, &gram)?;
    hadamard_mul(&factors.shared, &hadamard_div_stabilized(&num, &den, eps)?)
}

/// `L ← L ∘ (X F) ⊘ (L FᵀF + ε)` with `FᵀF` supplied.
fn update_loading<T: Scalar>(
    x: &DenseMatrix<T>,
    loading: &DenseMatrix<T>,
    shared: &DenseMatrix<T>,
    shared_gram: &DenseMatrix<T>,
    eps: T,
) -> Result<DenseMatrix<T>> {
    let num = matmul(x, shared)?;
    let den = matmul(loading, shared_gram)?;
    hadamard_mul(loading, &hadamard_div_stabilized(&num, &den, eps)?)
}

/// `P_i ← P_i ∘ (D_i F) ⊘ (P_i FᵀF + ε)`.
pub fn update_input_factor<T: Scalar>(
    data: &CoupledDataset<T>,
    factors: &FactorSet<T>,
    channel: usize,
    eps: T,
) -> Result<DenseMatrix<T>> {
    factors.check_against(data)?;
    check_eps(eps)?;
    let x = data.inputs.get(channel).ok_or_else(|| {
        Error::InvalidArgument(format!("no input channel {channel}"))
    })?;
    let gram = matmul_tn(&factors.shared, &factors.shared)?;
    update_loading(x, &factors.input_factors[channel], &factors.shared, &gram, eps)
}

/// `O_j ← O_j ∘ (A_j F) ⊘ (O_j FᵀF + ε)`.
pub fn update_layer_factor<T: Scalar>(
    data: &CoupledDataset<T>,
    factors: &FactorSet<T>,
    layer: usize,
    eps: T,
) -> Result<DenseMatrix<T>> {
    factors.check_against(data)?;
    check_eps(eps)?;
    let x = data
        .activations
        .get(layer)
        .ok_or_else(|| Error::InvalidArgument(format!("no layer {layer}")))?;
    let gram = matmul_tn(&factors.shared, &factors.shared)?;
    update_loading(x, &factors.layer_factors[layer], &factors.shared, &gram, eps)
}

/// Runs full sweeps (F, every P_i, every O_j) from a seeded random start
/// until the relative decrease of `J` over one sweep drops below
/// `rel_tol` or `max_iter` sweeps have run.
pub fn fit<T: Scalar>(data: &CoupledDataset<T>, config: &SolverConfig) -> Result<FitResult<T>> {
    let mut factors = init_factors(data, config)?;
    let eps = T::from_f64_lossy(config.eps);
    let rel_tol = T::from_f64_lossy(config.rel_tol);
    let initial = objective(data, &factors)?;

    let mut trace = Vec::new();
    let mut previous = initial;
    let mut converged = false;
    for _ in 0..config.max_iter {
        factors.shared = update_shared(data, &factors, eps)?;
        let gram = matmul_tn(&factors.shared, &factors.shared)?;
        for (x, p) in data.inputs.iter().zip(factors.input_factors.iter_mut()) {
            *p = update_loading(x, p, &factors.shared, &gram, eps)?;
        }
        for (x, o) in data.activations.iter().zip(factors.layer_factors.iter_mut()) {
            *o = update_loading(x, o, &factors.shared, &gram, eps)?;
        }
        let current = objective(data, &factors)?;
        trace.push(current);
        if current == T::zero() || (previous > T::zero() && (previous - current) / previous < rel_tol) {
            converged = true;
            break;
        }
        previous = current;
    }
    let last = trace.last().copied().unwrap_or(initial);
    Ok(FitResult {
        factors,
        iterations_run: trace.len(),
        objective_trace: trace,
        initial_objective: initial,
        converged,
        rmse: rmse_from_objective(last, data.total_entries()),
        seed: config.seed,
    })
}

/// Best of `restarts` fits (lowest final `J`), seeded `seed, seed+1, ...`.
pub fn fit_best_of<T: Scalar>(
    data: &CoupledDataset<T>,
    config: &SolverConfig,
    restarts: usize,
) -> Result<FitResult<T>> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let mut best: Option<FitResult<T>> = None;
    for r in 0..restarts {
        let cfg = SolverConfig {
            seed: config.seed.wrapping_add(r as u64),
            ..config.clone()
        };
        let result = fit(data, &cfg)?;
        if best
            .as_ref()
            .map_or(true, |b| result.final_objective() < b.final_objective())
        {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `sqrt(J / N)` with `N` the total number of data entries.
pub fn rmse_from_objective<T: Scalar>(objective: T, total_entries: usize) -> T {
    (objective / T::from_usize(total_entries.max(1)).unwrap()).sqrt()
}

/// Recomputes the RMSE of `result` against `data`.
pub fn rmse<T: Scalar>(result: &FitResult<T>, data: &CoupledDataset<T>) -> Result<T> {
    Ok(rmse_from_objective(
        objective(data, &result.factors)?,
        data.total_entries(),
    ))
}

/// Partial derivatives of `J` with respect to each factor block.
#[derive(Clone, Debug)]
pub struct FactorGradients<T> {
    pub input_factors: Vec<DenseMatrix<T>>,
    pub layer_factors: Vec<DenseMatrix<T>>,
    pub shared: DenseMatrix<T>,
}

/// `∂J/∂F = 2F(Σ LᵀL) − 2Σ XᵀL` and `∂J/∂L = 2L FᵀF − 2XF` for each block.
pub fn gradient<T: Scalar>(
    data: &CoupledDataset<T>,
    factors: &FactorSet<T>,
) -> Result<FactorGradients<T>> {
    factors.check_against(data)?;
    let two = T::one() + T::one();
    let k = factors.rank();
    let f = &factors.shared;
    let ftf = matmul_tn(f, f)?;

    let mut cross = DenseMatrix::zeros(data.columns(), k);
    let mut gram = DenseMatrix::zeros(k, k);
    for (x, l) in blocks(data, factors) {
        cross.add_assign(&matmul_tn(x, l)?)?;
        gram.add_assign(&matmul_tn(l, l)?)?;
    }
    let shared = matmul(f, &gram)?.zip_with(&cross, "gradient", |a, b| two * (a - b))?;

    let loading_grad = |x: &DenseMatrix<T>, l: &DenseMatrix<T>| -> Result<DenseMatrix<T>> {
        matmul(l, &ftf)?.zip_with(&matmul(x, f)?, "gradient", |a, b| two * (a - b))
    };
    let input_factors = data
        .inputs
        .iter()
        .zip(&factors.input_factors)
        .map(|(x, l)| loading_grad(x, l))
        .collect::<Result<_>>()?;
    let layer_factors = data
        .activations
        .iter()
        .zip(&factors.layer_factors)
        .map(|(x, l)| loading_grad(x, l))
        .collect::<Result<_>>()?;
    Ok(FactorGradients {
        input_factors,
        layer_factors,
        shared,
    })
}
