//! Minimal dense layers with hand-written backward passes in `f64`.

pub mod adam;
pub mod layers;
pub mod param;
pub mod tensors;

pub use adam::{Adam, AdamConfig};
pub use layers::{
    dropout, dropout_backward, gelu, gelu_grad, leaky_relu, leaky_relu_backward, softmax_rows,
    softmax_rows_backward, Embedding, LayerNorm, LayerNormCache, Linear, Mode,
};
pub use param::{child, Matrix, Param, ParamKind, Parameterized};
pub use tensors::{decode_safetensors, describe_safetensors, read_safetensors, write_safetensors};
