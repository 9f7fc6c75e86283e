//! Dense double-precision math and hand-written backprop.

mod adam;
mod checkpoint;
mod layers;
mod loss;
mod matrix;
mod params;
mod sequential;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, NamedArray, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use layers::{Activation, LayerNorm, LayerNormCache, Linear, Mlp, MlpCache, LAYER_NORM_EPS};
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use matrix::Matrix;
pub use params::{join, Parameters};
pub use sequential::{Layer, Sequential};
