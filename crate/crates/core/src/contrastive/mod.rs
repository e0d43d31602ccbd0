//! Contrastive pretraining: encoder, pooling, losses, memory bank, trainer,
//! checkpoints and the linear probe.

mod bank;
pub mod checkpoint;
mod encoder;
pub mod loss;
mod probe;
mod trainer;

pub use bank::{MemoryBank, DEFAULT_BANK_CAPACITY};
pub use encoder::{gap_pool, jafp_pool, EncoderGrads, EncoderParams, FeatureMap, ForwardCache};
pub use loss::{info_nce, reversed_loss, ReversedKind, DEFAULT_TAU};
pub use probe::{linear_probe, LinearClassifier, ProbeOptions, ProbeReport};
pub use trainer::{
    augment_sample, bandwidths_for, contrastive_objective, extract_features, item_seed, keys,
    momentum_update, prepare_sample, pretrain, pretrain_step, prime_mask_for, project, EncoderPair,
    LossBreakdown, Objective, OfflineBranch, OnlineBranch, OnlineGrads, PreparedSample, Schedule,
    StepReport, TrainConfig,
};
