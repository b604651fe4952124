//! Speaker embeddings at desk scale.
//!
//! An x-vector network (TDNN frame layers, statistics or multi-head attentive
//! pooling, an embedding layer and a cosine classifier) trained with
//! additive-margin softmax and, optionally, with an alignment term that pulls
//! together embeddings of the same speech under noise, under truncation, or
//! towards a per-speaker centroid. Everything runs on a single CPU core on
//! synthetic speakers, from feature extraction through EER and minDCF.
//!
//! - [`numcore`]: matrices, reverse-mode differentiation, gradient checking
//! - [`features`]: waveforms, the synthetic corpus, log-mel features
//! - [`augment`]: reverberation and additive noise
//! - [`model`]: the network, pooling and checkpoints
//! - [`losses`]: AM-softmax and the combined alignment loss
//! - [`training`]: pair construction, centroids and the SGD loop
//! - [`eval`]: scoring, metrics, spread and attention export
//! - [`cli`]: the `xvec` command suite

pub mod error;
pub mod numcore;
pub mod rng;

pub use error::{Error, Result};
pub mod features;
pub mod augment;
pub mod model;
pub mod losses;
pub mod eval;
pub mod training;
pub mod checks;
pub mod cli;

/// The book's chapters, compiled and run as doctests so they stay in sync with the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
