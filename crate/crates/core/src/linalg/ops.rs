use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{DenseMatrix, MatView};

fn product<T: Scalar>(
    op: &'static str,
    a: MatView<'_, T>,
    b: MatView<'_, T>,
) -> Result<DenseMatrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::shape(op, (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    let mut out = vec![T::zero(); a.rows() * b.cols()];
    T::gemm(a, b, &mut out);
    DenseMatrix::new(a.rows(), b.cols(), out)
}

/// `a * b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    product("matmul", a.view(), b.view())
}

/// `aᵀ * b` without materializing the transpose.
pub fn matmul_tn<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    product("matmul_tn", a.view().t(), b.view())
}

/// `a * bᵀ` without materializing the transpose.
pub fn matmul_nt<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    product("matmul_nt", a.view(), b.view().t())
}

pub fn hadamard_mul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.zip_with(b, "hadamard_mul", |x, y| x * y)
}

/// Entry-wise `num / (den + eps)`.
///
/// With `den >= 0` and `eps > 0` the denominator is bounded away from zero,
/// so every output is finite.
pub fn hadamard_div_stabilized<T: Scalar>(
    num: &DenseMatrix<T>,
    den: &DenseMatrix<T>,
    eps: T,
) -> Result<DenseMatrix<T>> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "stabilizer must be positive and finite, got {eps}"
        )));
    }
    num.zip_with(den, "hadamard_div_stabilized", |n, d| n / (d + eps))
}

/// Sum of squared entries.
pub fn frobenius_sq<T: Scalar>(a: &DenseMatrix<T>) -> T {
    a.as_slice().iter().map(|&v| v * v).sum()
}

/// Frobenius inner product `Σ a∘b`.
pub fn frobenius_dot<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::shape("frobenius_dot", a.shape(), b.shape()));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| x * y)
        .sum())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    type M = DenseMatrix<f64>;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> M {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn triple_loop(a: &M, b: &M) -> M {
        let mut out = M::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for p in 0..a.cols() {
                    acc += a[(i, p)] * b[(p, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random(3, 3, &mut rng);
        assert_eq!(matmul(&M::identity(3), &m).unwrap(), m);
    }

    #[test]
    fn hand_checked_product() {
        let a = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = M::from_rows(&[[5.0], [6.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[17.0, 39.0]);
    }

    #[test]
    fn matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(7, 5, &mut rng);
        let b = random(5, 4, &mut rng);
        let diff = matmul(&a, &b).unwrap().max_abs_diff(&triple_loop(&a, &b)).unwrap();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(6, 4, &mut rng);
        let b = random(6, 3, &mut rng);
        let c = random(5, 4, &mut rng);
        let tn = matmul_tn(&a, &b).unwrap();
        assert!(tn.max_abs_diff(&triple_loop(&a.transpose(), &b)).unwrap() < 1e-12);
        let nt = matmul_nt(&a, &c).unwrap();
        assert!(nt.max_abs_diff(&triple_loop(&a, &c.transpose())).unwrap() < 1e-12);
    }

    #[test]
    fn generic_fallback_gemm_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random(9, 6, &mut rng);
        let b = random(6, 10, &mut rng);
        let mut out = vec![0.0; 90];
        crate::scalar::naive_gemm(a.view(), b.view(), &mut out);
        let fast = matmul(&a, &b).unwrap();
        let slow = M::new(9, 10, out).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
    }

    #[test]
    fn single_precision_product() {
        let a = DenseMatrix::<f32>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let c = matmul(&a, &a).unwrap();
        assert_eq!(c.as_slice(), &[7.0, 10.0, 15.0, 22.0]);
    }

    #[test]
    fn dimension_mismatch_names_both_shapes() {
        let err = matmul(&M::zeros(2, 3), &M::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3 vs 2x3"), "{msg}");
    }

    #[test]
    fn hadamard_cases() {
        let a = M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = M::from_rows(&[[2.0, 0.0], [1.0, 3.0]]).unwrap();
        assert_eq!(hadamard_mul(&a, &b).unwrap().as_slice(), &[2.0, 0.0, 3.0, 12.0]);
        assert_eq!(hadamard_mul(&a, &M::filled(2, 2, 1.0)).unwrap(), a);
        assert_eq!(hadamard_mul(&a, &M::zeros(2, 2)).unwrap(), M::zeros(2, 2));
        assert!(hadamard_mul(&a, &M::zeros(2, 1)).is_err());
    }

    #[test]
    fn stabilized_division() {
        let one = M::filled(1, 1, 1.0);
        let zero = M::zeros(1, 1);
        let q = hadamard_div_stabilized(&one, &zero, 1e-9).unwrap();
        assert!((q[(0, 0)] - 1e9).abs() < 1e-3);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos = DenseMatrix::from_fn(4, 4, |_, _| rng.gen_range(0.1..2.0));
        let q = hadamard_div_stabilized(&pos, &pos, 1e-15).unwrap();
        assert!(q.as_slice().iter().all(|v: &f64| (v - 1.0).abs() < 1e-14));

        assert!(hadamard_div_stabilized(&one, &zero, 0.0).is_err());
        assert!(hadamard_div_stabilized(&one, &zero, -1.0).is_err());
        assert!(hadamard_div_stabilized(&one, &M::zeros(2, 1), 1e-9).is_err());
    }

    #[test]
    fn stabilized_division_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let num = DenseMatrix::from_fn(5, 7, |_, _| rng.gen_range(0.0..3.0));
        let den = DenseMatrix::from_fn(5, 7, |_, _| rng.gen_range(0.0..3.0));
        let eps = 1e-9;
        let q = hadamard_div_stabilized(&num, &den, eps).unwrap();
        for r in 0..5 {
            for c in 0..7 {
                assert_eq!(q[(r, c)], num[(r, c)] / (den[(r, c)] + eps));
            }
        }
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(frobenius_sq(&M::zeros(3, 2)), 0.0);
        assert_eq!(frobenius_sq(&M::from_rows(&[[3.0, 4.0]]).unwrap()), 25.0);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random(6, 6, &mut rng);
        let mut oracle = 0.0;
        for r in 0..6 {
            for c in 0..6 {
                oracle += a[(r, c)] * a[(r, c)];
            }
        }
        let got = frobenius_sq(&a);
        assert!(((got - oracle) / oracle).abs() < 1e-14);
        assert!((frobenius_dot(&a, &a).unwrap() - got).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), m in 1usize..8, k in 1usize..8, n in 1usize..8, p in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(m, k, &mut rng);
            let b = random(k, n, &mut rng);
            let c = random(n, p, &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let err = frobenius_sq(&left.sub(&right).unwrap()).sqrt();
            let scale = frobenius_sq(&left).sqrt().max(1e-300);
            prop_assert!(err / scale < 1e-10 || err < 1e-14);
        }

        #[test]
        fn stabilized_division_is_finite(seed in any::<u64>(), eps_exp in -300i32..0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let num = DenseMatrix::from_fn(4, 3, |_, _| rng.gen_range(0.0..1e6));
            let den = DenseMatrix::from_fn(4, 3, |_, _| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1e6) });
            let q = hadamard_div_stabilized(&num, &den, 10f64.powi(eps_exp)).unwrap();
            prop_assert!(q.all_finite());
        }
    }
}
