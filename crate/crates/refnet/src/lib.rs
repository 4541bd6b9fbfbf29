//! A small two-convolution MNIST classifier trained from scratch, used to
//! produce activation bundles under deliberately degraded training.
//!
//! Architecture (valid convolutions, stride 1; 2×2 max pooling, stride 2):
//!
//! ```text
//! 1×28×28 → conv 10@5×5 → 10×24×24 → maxpool → ReLU → 10×12×12  (layer 1, 1440)
//!         → conv 20@5×5 → 20×8×8   → maxpool → ReLU → 20×4×4    (layer 2, 320)
//!         → fully connected 320→10 → softmax
//! ```

mod capture;
mod error;
mod mnist;
mod net;
mod persist;
mod train;

pub use capture::capture_activations;
pub use error::{RefnetError, Result};
pub use mnist::{load_mnist, parse_idx_images, parse_idx_labels, Mnist, MnistSplit};
pub use net::{
    backward, cross_entropy, forward, forward_cached, loss_and_gradients, softmax, ForwardCache, ForwardOutput, Gradients,
    RefNetParams, CLASSES, IMAGE_SIDE, IMAGE_SIZE, LAYER1_SHAPE, LAYER1_SIZE, LAYER2_SHAPE,
    LAYER2_SIZE,
};
pub use persist::{read_params, write_params};
pub use train::{evaluate, train_one_epoch, Evaluation, TrainOutcome, TrainRegime};
