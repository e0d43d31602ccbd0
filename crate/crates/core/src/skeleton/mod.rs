//! Skeleton sequence types, NTU ingestion, and temporal/spatial normalization.

mod layout;
mod ntu;
mod sequence;

pub use layout::JointLayout;
pub use ntu::{parse_ntu_skeleton, NTU_JOINTS};
pub use sequence::{SequenceJson, SkeletonSequence};

pub(crate) use sequence::resample_values;
