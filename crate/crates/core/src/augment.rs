//! Interpolated samples along edit paths, labelled by the cost already spent.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::CostModel;
use crate::dataset::{one_hot, LabeledDataset};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::path::{build_edit_path, EditPath, OrderPolicy};
use crate::scalar::Scalar;

/// Class distribution: a convex combination of two one-hot labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedLabel<T = f64> {
    weights: Vec<T>,
}

impl<T: Scalar> MixedLabel<T> {
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let sum: T = weights.iter().copied().sum();
        if weights.iter().any(|&w| w.is_nan() || w < T::zero()) || (sum - T::one()).abs() > T::of(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "label weights must be nonnegative and sum to 1, got sum {sum}"
            )));
        }
        Ok(MixedLabel { weights })
    }

    pub fn one_hot(class: usize, class_count: usize) -> Self {
        MixedLabel {
            weights: one_hot(class, class_count),
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Label after the first `applied` operations: source and target one-hots weighted by
/// the remaining and the spent share of the path cost. A zero-cost path keeps the
/// source label.
pub fn mix_label<T: Scalar>(source: &[T], target: &[T], path: &EditPath<T>, applied: usize) -> Result<MixedLabel<T>> {
    if applied > path.len() {
        return Err(Error::InvalidArgument(format!(
            "prefix length {applied} exceeds path length {}",
            path.len()
        )));
    }
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch("source and target labels differ in length".into()));
    }
    let spent: T = path.operations[..applied].iter().map(|o| o.cost).sum();
    let remaining: T = path.operations[applied..].iter().map(|o| o.cost).sum();
    let total = spent + remaining;
    let (w_source, w_target) = if total > T::zero() {
        (remaining / total, spent / total)
    } else {
        (T::one(), T::zero())
    };
    let weights = source
        .iter()
        .zip(target)
        .map(|(&s, &t)| w_source * s + w_target * t)
        .collect();
    Ok(MixedLabel { weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    Random,
    Bfs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentationConfig {
    /// Augmented samples per training graph.
    pub aug_ratio: f64,
    /// Largest fraction of the path cost an augmented graph may have spent.
    pub max_aug_distance: f64,
    pub order: OrderKind,
    pub seed: u64,
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.aug_ratio > 0.0 && self.aug_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("aug_ratio {} must be positive", self.aug_ratio)));
        }
        if !(self.max_aug_distance > 0.0 && self.max_aug_distance <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "max_aug_distance {} must be in (0, 1]",
                self.max_aug_distance
            )));
        }
        Ok(())
    }
}

/// Longest prefix whose share of the total cost stays within `max_fraction`.
pub fn max_prefix<T: Scalar>(path: &EditPath<T>, max_fraction: f64) -> usize {
    if path.total_cost <= T::zero() {
        return path.len();
    }
    let total = path.total_cost.as_f64();
    path.prefix_costs
        .iter()
        .take_while(|c| c.as_f64() / total <= max_fraction + 1e-12)
        .count()
}

#[derive(Clone, Debug)]
pub struct AugmentedSample<T = f64> {
    pub graph: Graph<T>,
    pub label: MixedLabel<T>,
    pub source: usize,
    pub target: usize,
    /// Number of path operations applied to the source.
    pub applied: usize,
    pub path_len: usize,
}

/// Builds the Hungarian edit path, picks `m` uniformly from `1..=M` where `M` is
/// the longest prefix within `max_aug_distance`, and returns the graph after `m`
/// operations with its mixed label. `M = 0` returns the source unchanged.
pub fn sample_augmented<T: Scalar>(
    source: (&Graph<T>, &[T]),
    target: (&Graph<T>, &[T]),
    model: &CostModel<T>,
    config: &AugmentationConfig,
    rng: &mut impl Rng,
) -> Result<(Graph<T>, MixedLabel<T>, usize, usize)> {
    config.validate()?;
    let policy = match config.order {
        OrderKind::Random => OrderPolicy::Random(rng.random()),
        OrderKind::Bfs => OrderPolicy::Bfs,
    };
    let path = build_edit_path(source.0, target.0, model, policy, false)?;
    let limit = max_prefix(&path, config.max_aug_distance);
    let applied = if limit == 0 { 0 } else { rng.random_range(1..=limit) };
    let label = mix_label(source.1, target.1, &path, applied)?;
    Ok((path.state(applied)?, label, applied, path.len()))
}

/// `⌈aug_ratio·|train|⌉` samples between random distinct pairs of training graphs.
/// Pair `p` draws from its own RNG stream, so the output does not depend on how the
/// pairs are scheduled across threads.
pub fn augment_dataset<T: Scalar>(
    dataset: &LabeledDataset<T>,
    train: &[usize],
    model: &CostModel<T>,
    config: &AugmentationConfig,
) -> Result<Vec<AugmentedSample<T>>> {
    config.validate()?;
    if train.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "augmentation needs at least 2 training graphs, got {}",
            train.len()
        )));
    }
    let count = (config.aug_ratio * train.len() as f64 - 1e-9).ceil() as usize;
    (0..count)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(p as u64);
            let pair = index::sample(&mut rng, train.len(), 2);
            let (s, t) = (train[pair.index(0)], train[pair.index(1)]);
            let (ys, yt) = (dataset.one_hot(s), dataset.one_hot(t));
            let (graph, label, applied, path_len) = sample_augmented(
                (dataset.graph(s), &ys),
                (dataset.graph(t), &yt),
                model,
                config,
                &mut rng,
            )?;
            Ok(AugmentedSample {
                graph,
                label,
                source: s,
                target: t,
                applied,
                path_len,
            })
        })
        .collect()
}
