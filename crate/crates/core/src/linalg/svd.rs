use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{symmetric_tridiagonal_eigen, DenseMatrix};

const START_SEED: u64 = 0x5eed_1a2c_0f5e_7dd1;

/// The Gram matrix of the smaller side, applied implicitly through `a`.
struct Gram<'a, T> {
    a: &'a DenseMatrix<T>,
    /// `aᵀa` when true, `aaᵀ` otherwise.
    right: bool,
}

impl<T: Scalar> Gram<'_, T> {
    fn dim(&self) -> usize {
        if self.right {
            self.a.cols()
        } else {
            self.a.rows()
        }
    }

    fn apply(&self, v: &[T]) -> Vec<T> {
        let a = self.a;
        if self.right {
            let mut out = vec![T::zero(); a.cols()];
            for r in 0..a.rows() {
                let row = a.row(r);
                let u = dot(row, v);
                if u != T::zero() {
                    axpy(u, row, &mut out);
                }
            }
            out
        } else {
            let mut at_v = vec![T::zero(); a.cols()];
            for (r, &vr) in v.iter().enumerate() {
                if vr != T::zero() {
                    axpy(vr, a.row(r), &mut at_v);
                }
            }
            (0..a.rows()).map(|r| dot(a.row(r), &at_v)).collect()
        }
    }
}

fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += alpha * xi);
}

fn norm<T: Scalar>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

/// Two passes of classical Gram-Schmidt against the current basis.
fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn random_direction<T: Scalar>(n: usize, basis: &[Vec<T>], rng: &mut ChaCha8Rng) -> Option<Vec<T>> {
    for _ in 0..4 {
        let mut v: Vec<T> = (0..n)
            .map(|_| T::from_f64_lossy(rng.gen_range(-1.0..1.0)))
            .collect();
        orthogonalize(&mut v, basis);
        let nv = norm(&v);
        if nv > T::from_f64_lossy(1e-8) {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// The `k` largest singular values of `a`, non-increasing.
///
/// Runs Lanczos with full reorthogonalization on the Gram matrix of the
/// smaller dimension (never formed explicitly). Ritz pairs are accepted
/// once every one of the top `k` has residual `≤ tol · θ_max`, where `θ`
/// are Gram eigenvalues. An invariant subspace restarts from a fresh random
/// direction, so rank-deficient inputs run until the space is exhausted and
/// come back exact. Gram eigenvalues within `16·n·ε·θ_max` of zero are
/// reported as exact zeros. `max_iter` bounds the number of Lanczos steps.
pub fn top_singular_values<T: Scalar>(
    a: &DenseMatrix<T>,
    k: usize,
    tol: T,
    max_iter: usize,
) -> Result<Vec<T>> {
    let gram = Gram {
        a,
        right: a.cols() <= a.rows(),
    };
    let n = gram.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={n} for a {}x{} matrix, got {k}",
            a.rows(),
            a.cols()
        )));
    }
    if !(tol >= T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut scale = T::zero();
    let breakdown_factor = T::from_usize(n).unwrap() * T::epsilon() * T::from_f64_lossy(16.0);

    let mut v = random_direction(n, &basis, &mut rng).expect("fresh space has a direction");
    loop {
        let mut w = gram.apply(&v);
        let a_j = dot(&v, &w);
        axpy(-a_j, &v, &mut w);
        if let (Some(&b_prev), Some(prev)) = (beta.last(), basis.last()) {
            axpy(-b_prev, prev, &mut w);
        }
        basis.push(v);
        orthogonalize(&mut w, &basis);
        alpha.push(a_j);
        let b_j = norm(&w);

        let eig = symmetric_tridiagonal_eigen(&alpha, &beta)?;
        let mut order: Vec<usize> = (0..eig.values.len()).collect();
        order.sort_by(|&x, &y| eig.values[y].partial_cmp(&eig.values[x]).unwrap_or(std::cmp::Ordering::Equal));
        let top = order.first().map_or(T::zero(), |&i| eig.values[i]);
        scale = scale.max(top.abs());
        // Gram eigenvalues under this floor are rounding noise; a singular
        // value below sqrt(floor) is not resolvable through the Gram matrix.
        let floor = breakdown_factor * scale;
        let ritz = |count: usize| -> Vec<T> {
            order
                .iter()
                .take(count)
                .map(|&i| eig.values[i])
                .map(|theta| if theta <= floor { T::zero() } else { theta.sqrt() })
                .collect()
        };

        if basis.len() == n {
            return Ok(ritz(k));
        }

        let breakdown = b_j <= breakdown_factor * scale;
        let residual = order
            .iter()
            .take(k)
            .map(|&i| (b_j * eig.last_row[i]).abs())
            .fold(T::zero(), T::max);
        if !breakdown && basis.len() >= k && residual <= tol * top.max(T::zero()) {
            return Ok(ritz(k));
        }
        if basis.len() >= max_iter {
            let rel = if top > T::zero() { residual / top } else { residual };
            return Err(Error::NotConverged {
                partial: ritz(k).into_iter().map(|s| s.to_f64_lossy()).collect(),
                residual: rel.to_f64_lossy(),
                iterations: basis.len(),
            });
        }

        if breakdown {
            beta.push(T::zero());
            match random_direction(n, &basis, &mut rng) {
                Some(fresh) => v = fresh,
                // Numerically exhausted before reaching n vectors.
                None => {
                    let mut out = ritz(k);
                    out.resize(k, T::zero());
                    return Ok(out);
                }
            }
        } else {
            beta.push(b_j);
            w.iter_mut().for_each(|x| *x /= b_j);
            v = w;
        }
    }
}

#[cfg(test)]
mod tests {
    use factorlens_testkit::jacobi_eigenvalues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use proptest::prelude::*;

    use super::*;
    use crate::linalg::{frobenius_sq, matmul_tn};

    type M = DenseMatrix<f64>;

    fn random(rows: usize, cols: usize, seed: u64) -> M {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn oracle(a: &M, k: usize) -> Vec<f64> {
        let g = matmul_tn(a, a).unwrap();
        let rows: Vec<Vec<f64>> = (0..g.rows()).map(|r| g.row(r).to_vec()).collect();
        let mut ev = jacobi_eigenvalues(&rows);
        ev.sort_by(|x, y| y.total_cmp(x));
        ev.into_iter().take(k).map(|l| l.max(0.0).sqrt()).collect()
    }

    #[test]
    fn diagonal() {
        let a = M::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let s = top_singular_values(&a, 2, 1e-12, 100).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn rank_one() {
        // |u| = 2, |v| = 5
        let u = [2.0 / 3.0 * 2.0, 1.0 / 3.0 * 2.0, 2.0 / 3.0 * 2.0];
        let v = [3.0, 4.0, 0.0, 0.0];
        let a = M::from_fn(3, 4, |r, c| u[r] * v[c]);
        let s = top_singular_values(&a, 2, 1e-10, 100).unwrap();
        assert!((s[0] - 10.0).abs() < 1e-10, "{s:?}");
        assert!(s[1] <= 1e-10, "{s:?}");
    }

    #[test]
    fn matches_jacobi_on_random_rectangular() {
        let a = random(10, 8, 42);
        let s = top_singular_values(&a, 5, 1e-12, 100).unwrap();
        for (got, want) in s.iter().zip(oracle(&a, 5)) {
            assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
        }
        let wide = a.transpose();
        let s2 = top_singular_values(&wide, 5, 1e-12, 100).unwrap();
        for (x, y) in s.iter().zip(&s2) {
            assert!(((x - y) / y).abs() < 1e-10);
        }
    }

    #[test]
    fn repeated_values_are_all_found() {
        let a = M::from_fn(4, 4, |r, c| if r == c { [5.0, 5.0, 1.0, 5.0][r] } else { 0.0 });
        let s = top_singular_values(&a, 3, 1e-12, 100).unwrap();
        for v in &s {
            assert!((v - 5.0).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn zero_matrix() {
        let s = top_singular_values(&M::zeros(4, 3), 3, 1e-12, 50).unwrap();
        assert_eq!(s, vec![0.0; 3]);
    }

    #[test]
    fn exhausting_the_iteration_budget_reports_partial_values() {
        let a = random(40, 30, 7);
        match top_singular_values(&a, 5, 0.0, 3) {
            Err(Error::NotConverged { partial, residual, iterations }) => {
                assert_eq!(partial.len(), 3);
                assert!(residual > 0.0);
                assert_eq!(iterations, 3);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn argument_validation() {
        let a = random(3, 2, 1);
        assert!(top_singular_values(&a, 3, 1e-9, 10).is_err());
        assert!(top_singular_values(&a, 0, 1e-9, 10).is_err());
        assert!(top_singular_values(&a, 1, -1.0, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn full_spectrum_carries_frobenius_mass(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
            let a = random(rows, cols, seed);
            let k = rows.min(cols);
            let s = top_singular_values(&a, k, 1e-12, 200).unwrap();
            let mass: f64 = s.iter().map(|v| v * v).sum();
            let f = frobenius_sq(&a);
            prop_assert!(((mass - f) / f).abs() < 1e-8);
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(s.iter().all(|&v| v >= 0.0));
        }
    }
}
