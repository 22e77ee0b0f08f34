//! Diffusion-augmented graph contrastive learning for implicit-feedback
//! collaborative filtering.
//!
//! The crate couples a LightGCN graph encoder with a denoising-diffusion
//! augmenter: node embeddings are noised and denoised to sample contrastive
//! views, which feed an InfoNCE objective alongside BPR ranking loss with
//! positive-mixed hard negatives. Everything differentiable runs through a
//! small reverse-mode tape over dense `f64` tensors.
//!
//! Start with the runnable programs under `examples/`, one per capability,
//! or the `dgcl` binary for the train / eval / ablate / sweep workflow.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod contrastive;
pub mod data;
pub mod diffusion;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod sparse;
pub mod tape;
pub mod tensor;
pub mod trainer;
pub mod vae;

pub use error::DgclError;
pub use tape::{GradientMap, Tape};
pub use tensor::Tensor;
