//! Slow, obviously-correct reference computations used as test oracles.
//!
//! Nothing here depends on the crates under test: matrices are plain nested
//! `Vec`s and every routine is a direct loop transcription.

pub type Rows = Vec<Vec<f64>>;

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(sym: &[Vec<f64>]) -> Vec<f64> {
    let n = sym.len();
    let mut a: Rows = sym.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = a.iter().flatten().map(|v| v * v).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Singular values of `a` (descending) from the Jacobi eigenvalues of `aᵀa`.
pub fn singular_values_via_jacobi(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    let gram: Rows = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| (0..rows).map(|r| a[r][i] * a[r][j]).sum())
                .collect()
        })
        .collect();
    let mut ev = jacobi_eigenvalues(&gram);
    ev.sort_by(|x, y| y.total_cmp(x));
    ev.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Rows {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|p| row[p] * b[p][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Rows {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

/// `Σ_i ‖D_i − P_i Fᵀ‖² + Σ_j ‖A_j − O_j Fᵀ‖²`, entry by entry.
pub fn coupled_objective(
    inputs: &[Rows],
    activations: &[Rows],
    input_factors: &[Rows],
    layer_factors: &[Rows],
    shared: &[Vec<f64>],
) -> f64 {
    let term = |data: &Rows, loading: &Rows| -> f64 {
        let mut acc = 0.0;
        for (r, row) in data.iter().enumerate() {
            for (t, &x) in row.iter().enumerate() {
                let mut model = 0.0;
                for (l, &p) in loading[r].iter().enumerate() {
                    model += p * shared[t][l];
                }
                acc += (x - model) * (x - model);
            }
        }
        acc
    };
    inputs
        .iter()
        .zip(input_factors)
        .map(|(d, p)| term(d, p))
        .chain(activations.iter().zip(layer_factors).map(|(a, o)| term(a, o)))
        .sum()
}

/// One multiplicative update `X ← X ∘ num / (den + eps)`, entry by entry.
pub fn multiplicative_step(current: &[Vec<f64>], num: &[Vec<f64>], den: &[Vec<f64>], eps: f64) -> Rows {
    current
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, &x)| x * num[r][c] / (den[r][c] + eps))
                .collect()
        })
        .collect()
}

/// Valid (unpadded) stride-1 cross-correlation of a `[channel][row][col]`
/// input with `[out][in][kr][kc]` kernels plus per-output bias.
pub fn conv2d_valid(
    input: &[Vec<Vec<f64>>],
    kernels: &[Vec<Vec<Vec<f64>>>],
    bias: &[f64],
) -> Vec<Vec<Vec<f64>>> {
    let h = input[0].len();
    let w = input[0][0].len();
    let kh = kernels[0][0].len();
    let kw = kernels[0][0][0].len();
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = vec![vec![vec![0.0; ow]; oh]; kernels.len()];
    for (o, kernel) in kernels.iter().enumerate() {
        for r in 0..oh {
            for c in 0..ow {
                let mut acc = bias[o];
                for (ch, plane) in kernel.iter().enumerate() {
                    for i in 0..kh {
                        for j in 0..kw {
                            acc += plane[i][j] * input[ch][r + i][c + j];
                        }
                    }
                }
                out[o][r][c] = acc;
            }
        }
    }
    out
}

/// 2x2 stride-2 max pooling.
pub fn maxpool2(input: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    input
        .iter()
        .map(|plane| {
            (0..plane.len() / 2)
                .map(|r| {
                    (0..plane[0].len() / 2)
                        .map(|c| {
                            plane[2 * r][2 * c]
                                .max(plane[2 * r][2 * c + 1])
                                .max(plane[2 * r + 1][2 * c])
                                .max(plane[2 * r + 1][2 * c + 1])
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn relu(input: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    input
        .iter()
        .map(|p| p.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect())
        .collect()
}

/// Minimal IDX reader written straight from the format description:
/// big-endian magic, one big-endian u32 per dimension, then raw bytes.
pub fn read_idx(bytes: &[u8]) -> Option<(Vec<usize>, Vec<u8>)> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 {
        return None;
    }
    let ndim = bytes[3] as usize;
    let mut dims = Vec::new();
    for d in 0..ndim {
        let at = 4 + 4 * d;
        let b = bytes.get(at..at + 4)?;
        dims.push(((b[0] as usize) << 24) | ((b[1] as usize) << 16) | ((b[2] as usize) << 8) | b[3] as usize);
    }
    let start = 4 + 4 * ndim;
    let count: usize = dims.iter().product();
    Some((dims, bytes.get(start..start + count)?.to_vec()))
}
