use factorlens::assembly::{ActivationBundle, BundleMeta, ImageActivations};

use crate::mnist::MnistSplit;
use crate::net::{forward, RefNetParams, IMAGE_SIDE, LAYER1_SHAPE, LAYER2_SHAPE};

/// Runs the first `limit` images of `test` (all of them if fewer) through
/// the network and records input pixels and both post-ReLU maps.
///
/// The returned bundle's `regime` is `null` and `test_accuracy` is `None`;
/// callers fill them in.
pub fn capture_activations(params: &RefNetParams, test: &MnistSplit, limit: usize) -> crate::Result<ActivationBundle> {
    let n = limit.min(test.len());
    let mut images = Vec::with_capacity(n);
    for k in 0..n {
        let pixels = test.image(k);
        let out = forward(params, pixels)?;
        images.push(ImageActivations {
            channels: vec![pixels.to_vec()],
            layers: vec![out.layer1, out.layer2],
        });
    }
    Ok(ActivationBundle {
        images,
        labels: test.labels[..n].iter().map(|&l| u32::from(l)).collect(),
        meta: BundleMeta {
            regime: serde_json::Value::Null,
            test_accuracy: None,
            input_shape: [1, IMAGE_SIDE, IMAGE_SIDE],
            layer_shapes: vec![LAYER1_SHAPE, LAYER2_SHAPE],
        },
    })
}
