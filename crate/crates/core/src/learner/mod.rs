//! The trainable cost model.
//!
//! Node embeddings come from sum-aggregation message passing; substitution costs are
//! smoothed embedding distances and insertion/deletion costs come from a softplus
//! MLP head. Training minimises a triplet hinge on the Sinkhorn relaxation of GED,
//! with gradients computed by hand-written reverse passes through every stage.

mod adam;
mod checkpoint;
mod forward;
mod params;
mod train;
mod triplet;

pub use adam::{adam_step, step_decay, AdamState};
pub use checkpoint::Checkpoint;
pub use forward::{cost_matrix_from_passes, embed_with_tape, gnn_embed, GraphPass};
pub use params::{CostModelParams, Gradient, Linear};
pub use train::{sample_triplets, train_cost, EpochRecord, TrainHistory, TrainOutcome, TripletIndex};
pub use triplet::{grad, hinge, soft_distance, triplet_loss, Triplet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub layers: usize,
    pub hidden_dim: usize,
    /// Entropic temperature of the Sinkhorn relaxation.
    pub delta: f64,
    /// Triplet margin.
    pub gamma: f64,
    pub epochs: usize,
    pub sinkhorn_k: usize,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    /// Divide each soft GED by `n + m` inside the loss.
    pub normalize_by_size: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            layers: 2,
            hidden_dim: 64,
            delta: 0.1,
            gamma: 1.0,
            epochs: 100,
            sinkhorn_k: 10,
            lr_decay: 0.1,
            lr_decay_every: 25,
            normalize_by_size: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("lr_decay", self.lr_decay),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        let counts = [
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("epochs", self.epochs),
            ("sinkhorn_k", self.sinkhorn_k),
            ("lr_decay_every", self.lr_decay_every),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Learning rate in effect during the given 0-based epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        step_decay(self.learning_rate, epoch, self.lr_decay, self.lr_decay_every)
    }
}
