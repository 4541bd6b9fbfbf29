use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

use crate::linalg::MatView;

/// Floating-point element type accepted by the numeric core.
///
/// Besides the usual arithmetic bounds, a scalar knows how to run a dense
/// product `out = a * b` over strided views. The default is a plain
/// cache-friendly loop; `f32` and `f64` dispatch to `matrixmultiply`, which
/// is single-threaded and therefore bit-reproducible on a given machine.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Overwrites `out` (row-major, `a.rows() x b.cols()`) with `a * b`.
    fn gemm(a: MatView<'_, Self>, b: MatView<'_, Self>, out: &mut [Self]) {
        naive_gemm(a, b, out)
    }

    /// Lossless for `f32`/`f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

pub(crate) fn naive_gemm<T: Scalar>(a: MatView<'_, T>, b: MatView<'_, T>, out: &mut [T]) {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    debug_assert_eq!(k, b.rows());
    debug_assert_eq!(out.len(), m * n);
    out.iter_mut().for_each(|x| *x = T::zero());
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a.get(i, p);
            if aip == T::zero() {
                continue;
            }
            for (j, o) in row.iter_mut().enumerate() {
                *o += aip * b.get(p, j);
            }
        }
    }
}

impl Scalar for f64 {
    fn gemm(a: MatView<'_, f64>, b: MatView<'_, f64>, out: &mut [f64]) {
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        assert_eq!(k, b.rows());
        assert_eq!(out.len(), m * n);
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            out.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let (rsa, csa) = a.strides();
        let (rsb, csb) = b.strides();
        // SAFETY: MatView guarantees every (i, j) with i < rows, j < cols maps
        // inside its slice, and `out` has exactly m * n elements. beta = 0 so
        // `out` is write-only.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                rsa as isize,
                csa as isize,
                b.as_ptr(),
                rsb as isize,
                csb as isize,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

impl Scalar for f32 {
    fn gemm(a: MatView<'_, f32>, b: MatView<'_, f32>, out: &mut [f32]) {
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        assert_eq!(k, b.rows());
        assert_eq!(out.len(), m * n);
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            out.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let (rsa, csa) = a.strides();
        let (rsb, csb) = b.strides();
        // SAFETY: see the f64 impl.
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                rsa as isize,
                csa as isize,
                b.as_ptr(),
                rsb as isize,
                csb as isize,
                0.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}
