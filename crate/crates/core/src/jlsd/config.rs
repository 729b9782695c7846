use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch sizes explored for the baselines.
pub const BATCH_SIZE_GRID: [usize; 3] = [4, 8, 16];
/// Lower-layer learning rates used for pretrained contextual encoders. The
/// trainable embedding table defaults to a larger rate, see
/// [`DEFAULT_LR_LOWER`].
pub const LR_LOWER_GRID: [f64; 4] = [2e-5, 3e-5, 4e-5, 5e-5];
pub const LR_UPPER_GRID: [f64; 5] = [1e-4, 2e-4, 5e-4, 1e-3, 5e-3];
pub const RATIO_GRID: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 4.0];
pub const EPOCH_GRID: [usize; 5] = [25, 50, 75, 100, 125];

pub const DEFAULT_LR_LOWER: f64 = 1e-3;

/// Hyperparameters shared by every training mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JlsdConfig {
    /// Training iterations `T` (one optimizer step each).
    pub iterations: usize,
    /// Unlabeled-to-labeled ratio `r`; each self-distillation batch holds
    /// `round(r * batch_size)` pseudo-labeled documents.
    pub ratio: f64,
    pub batch_size: usize,
    pub lr_lower: f64,
    pub lr_upper: f64,
    /// Iterations between dev evaluations.
    pub eval_every: usize,
    /// Evaluations without improvement before supervised training stops;
    /// 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub min_count: usize,
    /// Source-phase iterations for simple pretraining (defaults to `iterations`).
    pub source_iterations: Option<usize>,
    /// Source documents added per epoch in simple joint training (defaults to
    /// the target training-set size).
    pub source_per_epoch: Option<usize>,
}

impl Default for JlsdConfig {
    fn default() -> Self {
        JlsdConfig {
            iterations: 2000,
            ratio: 1.0,
            batch_size: 8,
            lr_lower: DEFAULT_LR_LOWER,
            lr_upper: 1e-3,
            eval_every: 50,
            patience: 10,
            seed: 1,
            embed_dim: 64,
            hidden_dim: 64,
            min_count: 1,
            source_iterations: None,
            source_per_epoch: None,
        }
    }
}

/// `round(x)` with halves rounded up.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

impl JlsdConfig {
    /// `k = round(r * |L|)`.
    pub fn unlabeled_per_batch(&self, labeled: usize) -> usize {
        round_half_up(self.ratio * labeled as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.iterations < 1 {
            return fail("iterations must be at least 1");
        }
        if !(self.ratio.is_finite() && self.ratio >= 0.0) {
            return fail("ratio must be a non-negative number");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1");
        }
        for (name, lr) in [("lr_lower", self.lr_lower), ("lr_upper", self.lr_upper)] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be a non-negative number"
                )));
            }
        }
        if self.eval_every < 1 {
            return fail("eval_every must be at least 1");
        }
        if self.embed_dim < 1 || self.hidden_dim < 1 {
            return fail("embed_dim and hidden_dim must be at least 1");
        }
        if self.min_count < 1 {
            return fail("min_count must be at least 1");
        }
        Ok(())
    }
}
