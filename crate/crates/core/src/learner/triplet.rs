//! Triplet hinge loss over soft GED and its exact gradient.

use super::forward::{cost_matrix_backward, cost_matrix_from_passes, GraphPass};
use super::params::{CostModelParams, Gradient};
use super::TrainConfig;
use crate::assignment::{soft_objective, soft_objective_grad};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

/// An anchor, a same-class positive and a different-class negative, with class labels.
#[derive(Clone, Copy, Debug)]
pub struct Triplet<'a, T> {
    pub anchor: &'a Graph<T>,
    pub positive: &'a Graph<T>,
    pub negative: &'a Graph<T>,
    pub labels: [usize; 3],
}

impl<T: Scalar> Triplet<'_, T> {
    fn check(&self) -> Result<()> {
        let [a, p, n] = self.labels;
        if a != p || a == n {
            return Err(Error::InvalidArgument(format!(
                "triplet labels ({a}, {p}, {n}) need positive == anchor != negative"
            )));
        }
        Ok(())
    }
}

/// `max(d⁺ − d⁻ + γ, 0)`.
pub fn hinge<T: Scalar>(d_pos: T, d_neg: T, gamma: T) -> T {
    (d_pos - d_neg + gamma).max(T::zero())
}

fn size_scale<T: Scalar>(a: &Graph<T>, b: &Graph<T>, config: &TrainConfig) -> T {
    if config.normalize_by_size {
        T::one() / T::of((a.node_count() + b.node_count()).max(1) as f64)
    } else {
        T::one()
    }
}

fn finite<T: Scalar>(x: T, stage: &'static str) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// Soft GED between two graphs under learned parameters.
pub fn soft_distance<T: Scalar>(
    a: &Graph<T>,
    b: &Graph<T>,
    params: &CostModelParams<T>,
    config: &TrainConfig,
) -> Result<T> {
    let pa = GraphPass::new(a, params)?;
    let pb = GraphPass::new(b, params)?;
    let cost = cost_matrix_from_passes(&pa, &pb)?;
    let d = soft_objective(&cost, T::of(config.delta), config.sinkhorn_k)?;
    finite(d * size_scale(a, b, config), "sinkhorn")
}

pub fn triplet_loss<T: Scalar>(
    triplet: &Triplet<'_, T>,
    params: &CostModelParams<T>,
    config: &TrainConfig,
) -> Result<T> {
    triplet.check()?;
    let d_pos = soft_distance(triplet.anchor, triplet.positive, params, config)?;
    let d_neg = soft_distance(triplet.anchor, triplet.negative, params, config)?;
    finite(hinge(d_pos, d_neg, T::of(config.gamma)), "loss")
}

/// Loss and exact reverse-mode gradient through embeddings, cost matrices, every
/// Sinkhorn round and the hinge. The hinge kink takes subgradient 0.
pub fn grad<T: Scalar>(
    triplet: &Triplet<'_, T>,
    params: &CostModelParams<T>,
    config: &TrainConfig,
) -> Result<(T, Gradient<T>)> {
    triplet.check()?;
    let delta = T::of(config.delta);
    let anchor = GraphPass::new(triplet.anchor, params)?;
    let positive = GraphPass::new(triplet.positive, params)?;
    let negative = GraphPass::new(triplet.negative, params)?;
    if [&anchor, &positive, &negative]
        .iter()
        .any(|p| p.embeddings().iter().any(|x| !x.is_finite()))
    {
        return Err(Error::NonFinite { stage: "embeddings" });
    }

    let cost_pos = cost_matrix_from_passes(&anchor, &positive)?;
    let cost_neg = cost_matrix_from_passes(&anchor, &negative)?;
    let (d_pos, g_pos) = soft_objective_grad(&cost_pos, delta, config.sinkhorn_k)?;
    let (d_neg, g_neg) = soft_objective_grad(&cost_neg, delta, config.sinkhorn_k)?;
    let scale_pos = size_scale(triplet.anchor, triplet.positive, config);
    let scale_neg = size_scale(triplet.anchor, triplet.negative, config);
    let d_pos = finite(d_pos * scale_pos, "sinkhorn")?;
    let d_neg = finite(d_neg * scale_neg, "sinkhorn")?;

    let loss = finite(hinge(d_pos, d_neg, T::of(config.gamma)), "loss")?;
    let mut gradient = Gradient::zeros_for(params);
    if loss <= T::zero() {
        return Ok((loss, gradient));
    }

    let mut seed_anchor = anchor.zero_seed();
    let mut seed_pos = positive.zero_seed();
    let mut seed_neg = negative.zero_seed();
    cost_matrix_backward(
        &cost_pos,
        &g_pos.mapv(|x| x * scale_pos),
        &anchor,
        &positive,
        &mut seed_anchor,
        &mut seed_pos,
    );
    cost_matrix_backward(
        &cost_neg,
        &g_neg.mapv(|x| -x * scale_neg),
        &anchor,
        &negative,
        &mut seed_anchor,
        &mut seed_neg,
    );
    anchor.backward(params, seed_anchor, &mut gradient);
    positive.backward(params, seed_pos, &mut gradient);
    negative.backward(params, seed_neg, &mut gradient);
    if !gradient.is_finite() {
        return Err(Error::NonFinite { stage: "gradient" });
    }
    Ok((loss, gradient))
}
