use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RefnetError, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_SIZE: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const CLASSES: usize = 10;

const K: usize = 5;
const C1: usize = 10;
const C2: usize = 20;
const CONV1_SIDE: usize = IMAGE_SIDE - K + 1; // 24
const POOL1_SIDE: usize = CONV1_SIDE / 2; // 12
const CONV2_SIDE: usize = POOL1_SIDE - K + 1; // 8
const POOL2_SIDE: usize = CONV2_SIDE / 2; // 4

/// `[channels, height, width]` of the first captured activation map.
pub const LAYER1_SHAPE: [usize; 3] = [C1, POOL1_SIDE, POOL1_SIDE];
pub const LAYER1_SIZE: usize = C1 * POOL1_SIDE * POOL1_SIDE;
pub const LAYER2_SHAPE: [usize; 3] = [C2, POOL2_SIDE, POOL2_SIDE];
pub const LAYER2_SIZE: usize = C2 * POOL2_SIDE * POOL2_SIDE;

/// Network parameters. Kernels are stored `[out][in][row][col]`; the
/// fully connected weight is `LAYER2_SIZE × CLASSES`, row-major, so
/// `logits[o] = Σ_i a[i]·fc_weight[i·10 + o] + fc_bias[o]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefNetParams {
    pub conv1_weight: Vec<f64>,
    pub conv1_bias: Vec<f64>,
    pub conv2_weight: Vec<f64>,
    pub conv2_bias: Vec<f64>,
    pub fc_weight: Vec<f64>,
    pub fc_bias: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = RefNetParams;

impl RefNetParams {
    pub fn zeros() -> Self {
        Self {
            conv1_weight: vec![0.0; C1 * K * K],
            conv1_bias: vec![0.0; C1],
            conv2_weight: vec![0.0; C2 * C1 * K * K],
            conv2_bias: vec![0.0; C2],
            fc_weight: vec![0.0; LAYER2_SIZE * CLASSES],
            fc_bias: vec![0.0; CLASSES],
        }
    }

    /// Uniform on `±1/√fan_in` for every weight and bias, drawn in field
    /// order from a ChaCha8 stream seeded with `seed`.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros();
        let fans = [K * K, K * K, C1 * K * K, C1 * K * K, LAYER2_SIZE, LAYER2_SIZE];
        for (block, fan_in) in p.blocks_mut().into_iter().zip(fans) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in block.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    pub fn block_names() -> [&'static str; 6] {
        [
            "conv1_weight",
            "conv1_bias",
            "conv2_weight",
            "conv2_bias",
            "fc_weight",
            "fc_bias",
        ]
    }

    /// `(rows, cols)` of each block when stored as a matrix.
    pub fn block_shapes() -> [(usize, usize); 6] {
        [
            (C1, K * K),
            (C1, 1),
            (C2, C1 * K * K),
            (C2, 1),
            (LAYER2_SIZE, CLASSES),
            (CLASSES, 1),
        ]
    }

    pub fn blocks(&self) -> [&Vec<f64>; 6] {
        [
            &self.conv1_weight,
            &self.conv1_bias,
            &self.conv2_weight,
            &self.conv2_bias,
            &self.fc_weight,
            &self.fc_bias,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.conv1_weight,
            &mut self.conv1_bias,
            &mut self.conv2_weight,
            &mut self.conv2_bias,
            &mut self.fc_weight,
            &mut self.fc_bias,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `self += alpha · other`, block by block.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += alpha * s;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        for b in self.blocks_mut() {
            b.fill(0.0);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    /// Post-ReLU first-layer map, channel-major then row then column.
    pub layer1: Vec<f64>,
    pub layer2: Vec<f64>,
}

/// Forward intermediates needed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub out: ForwardOutput,
    input: Vec<f64>,
    // Index into the pre-pool conv output that won each pooling window.
    argmax1: Vec<usize>,
    argmax2: Vec<usize>,
}

fn conv_valid(
    input: &[f64],
    in_c: usize,
    side: usize,
    weight: &[f64],
    bias: &[f64],
    out: &mut [f64],
) {
    let o_side = side - K + 1;
    let plane = o_side * o_side;
    for (o, b) in bias.iter().enumerate() {
        let dst_plane = &mut out[o * plane..(o + 1) * plane];
        dst_plane.fill(*b);
        for c in 0..in_c {
            let src_plane = &input[c * side * side..(c + 1) * side * side];
            for ki in 0..K {
                for kj in 0..K {
                    let w = weight[((o * in_c + c) * K + ki) * K + kj];
                    for r in 0..o_side {
                        let src = &src_plane[(r + ki) * side + kj..][..o_side];
                        let dst = &mut dst_plane[r * o_side..][..o_side];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
}

/// 2×2 stride-2 max pooling followed by ReLU. Ties go to the first cell in
/// row-major window order.
fn pool_relu(input: &[f64], channels: usize, side: usize, out: &mut [f64], argmax: &mut [usize]) {
    let half = side / 2;
    for c in 0..channels {
        for r in 0..half {
            for s in 0..half {
                let base = c * side * side + 2 * r * side + 2 * s;
                let mut best = base;
                for cand in [base + 1, base + side, base + side + 1] {
                    if input[cand] > input[best] {
                        best = cand;
                    }
                }
                let at = (c * half + r) * half + s;
                out[at] = input[best].max(0.0);
                argmax[at] = best;
            }
        }
    }
}

pub fn forward_cached(params: &RefNetParams, image: &[f64]) -> Result<ForwardCache> {
    if image.len() != IMAGE_SIZE {
        return Err(RefnetError::Shape {
            expected: IMAGE_SIZE,
            got: image.len(),
        });
    }
    let mut z1 = vec![0.0; C1 * CONV1_SIDE * CONV1_SIDE];
    conv_valid(image, 1, IMAGE_SIDE, &params.conv1_weight, &params.conv1_bias, &mut z1);
    let mut layer1 = vec![0.0; LAYER1_SIZE];
    let mut argmax1 = vec![0; LAYER1_SIZE];
    pool_relu(&z1, C1, CONV1_SIDE, &mut layer1, &mut argmax1);

    let mut z2 = vec![0.0; C2 * CONV2_SIDE * CONV2_SIDE];
    conv_valid(&layer1, C1, POOL1_SIDE, &params.conv2_weight, &params.conv2_bias, &mut z2);
    let mut layer2 = vec![0.0; LAYER2_SIZE];
    let mut argmax2 = vec![0; LAYER2_SIZE];
    pool_relu(&z2, C2, CONV2_SIDE, &mut layer2, &mut argmax2);

    let mut logits = params.fc_bias.clone();
    for (i, &a) in layer2.iter().enumerate() {
        if a != 0.0 {
            let row = &params.fc_weight[i * CLASSES..(i + 1) * CLASSES];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += a * w;
            }
        }
    }
    Ok(ForwardCache {
        out: ForwardOutput {
            logits,
            layer1,
            layer2,
        },
        input: image.to_vec(),
        argmax1,
        argmax2,
    })
}

/// conv → maxpool → ReLU → conv → maxpool → ReLU → fully connected.
pub fn forward(params: &RefNetParams, image: &[f64]) -> Result<ForwardOutput> {
    forward_cached(params, image).map(|c| c.out)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(logits)` against `label`, via log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Accumulates into `grads` the parameter gradient of a scalar loss whose
/// derivative with respect to the logits is `dlogits`.
///
/// Only pooling winners with a positive output carry gradient, so both
/// convolution backward passes iterate over those positions alone.
pub fn backward(params: &RefNetParams, cache: &ForwardCache, dlogits: &[f64], grads: &mut Gradients) {
    let out = &cache.out;
    for (g, d) in grads.fc_bias.iter_mut().zip(dlogits) {
        *g += d;
    }
    let mut dz2 = Vec::with_capacity(LAYER2_SIZE);
    for (i, &a) in out.layer2.iter().enumerate() {
        let w_row = &params.fc_weight[i * CLASSES..(i + 1) * CLASSES];
        if a > 0.0 {
            let g_row = &mut grads.fc_weight[i * CLASSES..(i + 1) * CLASSES];
            let mut da = 0.0;
            for o in 0..CLASSES {
                g_row[o] += a * dlogits[o];
                da += w_row[o] * dlogits[o];
            }
            dz2.push((cache.argmax2[i], da));
        }
    }

    let z2_plane = CONV2_SIDE * CONV2_SIDE;
    let a1_plane = POOL1_SIDE * POOL1_SIDE;
    let mut da1 = vec![0.0; LAYER1_SIZE];
    for &(pos, g) in &dz2 {
        let o = pos / z2_plane;
        let (r, s) = ((pos % z2_plane) / CONV2_SIDE, pos % CONV2_SIDE);
        grads.conv2_bias[o] += g;
        for c in 0..C1 {
            let wbase = (o * C1 + c) * K * K;
            for ki in 0..K {
                let at = c * a1_plane + (r + ki) * POOL1_SIDE + s;
                let src = &out.layer1[at..at + K];
                let dw = &mut grads.conv2_weight[wbase + ki * K..][..K];
                for (d, x) in dw.iter_mut().zip(src) {
                    *d += g * x;
                }
                let w = &params.conv2_weight[wbase + ki * K..][..K];
                for (d, wv) in da1[at..at + K].iter_mut().zip(w) {
                    *d += g * wv;
                }
            }
        }
    }

    let z1_plane = CONV1_SIDE * CONV1_SIDE;
    for (i, (&a, &g)) in out.layer1.iter().zip(&da1).enumerate() {
        if a <= 0.0 || g == 0.0 {
            continue;
        }
        let pos = cache.argmax1[i];
        let o = pos / z1_plane;
        let (r, s) = ((pos % z1_plane) / CONV1_SIDE, pos % CONV1_SIDE);
        grads.conv1_bias[o] += g;
        for ki in 0..K {
            let at = (r + ki) * IMAGE_SIDE + s;
            let dw = &mut grads.conv1_weight[o * K * K + ki * K..][..K];
            for (d, x) in dw.iter_mut().zip(&cache.input[at..at + K]) {
                *d += g * x;
            }
        }
    }
}

/// Mean cross-entropy over a batch and its gradient.
pub fn loss_and_gradients(
    params: &RefNetParams,
    images: &[&[f64]],
    labels: &[u8],
    grads: &mut Gradients,
) -> Result<f64> {
    grads.fill_zero();
    let scale = 1.0 / images.len() as f64;
    let mut loss = 0.0;
    for (image, &label) in images.iter().zip(labels) {
        let cache = forward_cached(params, image)?;
        loss += cross_entropy(&cache.out.logits, label as usize);
        let mut d = softmax(&cache.out.logits);
        d[label as usize] -= 1.0;
        d.iter_mut().for_each(|v| *v *= scale);
        backward(params, &cache, &d, grads);
    }
    Ok(loss * scale)
}
