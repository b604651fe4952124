//! The x-vector network: three TDNN layers, two frame-level dense layers,
//! statistics or attentive pooling, the embedding layer and a cosine
//! classifier over training speakers.

mod checkpoint;
mod embedding;
mod network;
mod pooling;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use embedding::{cosine, Embedding};
pub use network::{
    cosine_logits, tdnn_layer, ForwardNodes, ForwardOutput, ModelSpec, NetworkParams, ParamNodes,
    PoolingMode, Tensor, Topology, COSINE_EPS, LAYER1_CONTEXT, LAYER23_CONTEXT, MIN_FRAMES,
};
pub use pooling::{
    attentive_pool, attentive_pool_node, check_heads, stats_pool, stats_pool_node, AttentivePooled,
    VAR_FLOOR,
};
