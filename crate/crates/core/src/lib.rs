//! Spatio-temporal joint density (STJD) for skeleton sequences.
//!
//! The crate computes a per-joint Gaussian kernel density with learnable
//! per-joint bandwidths, tracks how that density changes between frames, and
//! uses the normalized change to pick out "prime" joints: the joints that move
//! together with the static joints they interact with. On top of that it
//! provides a momentum-contrast pretraining loop steered by the prime joints,
//! a density-weighted masking sampler, synthetic data, and a linear probe.

pub mod augment;
pub mod config;
pub mod contrastive;
pub mod density;
pub mod error;
pub mod prime;
pub mod skeleton;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use skeleton::{JointLayout, SkeletonSequence};
