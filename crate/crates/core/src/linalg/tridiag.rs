use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues of a symmetric tridiagonal matrix, together with the last
/// component of each unit eigenvector (what a Lanczos residual estimate
/// needs). Values are returned in no particular order; `last_row[i]`
/// belongs to `values[i]`.
#[derive(Clone, Debug)]
pub struct TridiagonalEigen<T> {
    pub values: Vec<T>,
    pub last_row: Vec<T>,
}

/// Implicit QL with Wilkinson shifts on the matrix with diagonal `diag` and
/// sub/super-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn symmetric_tridiagonal_eigen<T: Scalar>(
    diag: &[T],
    off: &[T],
) -> Result<TridiagonalEigen<T>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "tridiagonal needs n >= 1 diagonal and n - 1 off-diagonal entries, got {} and {}",
            n,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.to_vec();
    e.push(T::zero());
    // Row n-1 of the accumulated rotation matrix; rotations act on rows
    // independently so this is all we need to track.
    let mut z = vec![T::zero(); n];
    z[n - 1] = T::one();

    let two = T::one() + T::one();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > 64 {
                return Err(Error::NotConverged {
                    partial: d.iter().map(|v| v.to_f64_lossy()).collect(),
                    residual: e[l].abs().to_f64_lossy(),
                    iterations: sweeps,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zi1 = z[i + 1];
                z[i + 1] = s * z[i] + c * zi1;
                z[i] = c * z[i] - s * zi1;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(TridiagonalEigen {
        values: d,
        last_row: z,
    })
}
