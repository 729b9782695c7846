//! Training engines: the supervised baseline, self-distillation with
//! unlabeled documents, and the two source-corpus transfer baselines.
//!
//! Every mode is a deterministic function of its inputs and `cfg.seed`.
//! Each consumer of randomness draws from its own stream of that seed.

mod config;
mod distill;
mod report;
mod supervised;
mod transfer;

pub use config::{
    JlsdConfig, BATCH_SIZE_GRID, DEFAULT_LR_LOWER, EPOCH_GRID, LR_LOWER_GRID, LR_UPPER_GRID,
    RATIO_GRID,
};
pub use distill::{init_student, jlsd_train, pseudo_label, self_distill, SwapTracker};
pub use report::{Phase, TrainEvent, TrainReport};
pub use supervised::{fine_tune, train_supervised};
pub use transfer::{train_simple_joint, train_simple_pretrain};

/// Batch sampling for supervised training and the target phase.
pub const STREAM_SUPERVISED: u64 = 1;
pub const STREAM_STUDENT: u64 = 2;
pub const STREAM_SOURCE: u64 = 3;
pub const STREAM_JOINT: u64 = 4;
