//! Graph edit distance with learnable node-operation costs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`], [`dataset`], [`tudataset`], [`json`], [`lollipop`]: graphs, labelled
//!   datasets and their on-disk formats.
//! - [`cost`]: unit, feature-distance and learned node-operation costs, and the
//!   `(n+m)×(n+m)` cost matrix that reduces GED to an assignment problem.
//! - [`assignment`]: exact (Hungarian) and entropic (Sinkhorn-Knopp) assignment.
//! - [`ged`], [`path`], [`augment`]: distances, edit paths and interpolated samples.
//! - [`learner`]: the trainable cost network, its gradients and the training loop.
//! - [`eval`]: nearest-neighbour classification and cost diagnostics.
//!
//! All numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`,
//! which is what the file formats and the CLI use.

pub mod assignment;
pub mod augment;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod ged;
pub mod graph;
pub mod json;
pub mod learner;
pub mod lollipop;
pub mod path;
pub mod scalar;
pub mod tudataset;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::Graph<f64>;
pub type LabeledDataset = dataset::LabeledDataset<f64>;
pub type CostModel = cost::CostModel<f64>;
pub type CostMatrix = cost::CostMatrix<f64>;
pub type Assignment = assignment::Assignment<f64>;
pub type SoftAssignment = assignment::SoftAssignment<f64>;
pub type EditPath = path::EditPath<f64>;
pub type MixedLabel = augment::MixedLabel<f64>;
pub type CostModelParams = learner::CostModelParams<f64>;
pub type Gradient = learner::Gradient<f64>;

pub type Graph32 = graph::Graph<f32>;
pub type CostMatrix32 = cost::CostMatrix<f32>;
pub type CostModelParams32 = learner::CostModelParams<f32>;
