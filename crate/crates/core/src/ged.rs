//! Graph edit distance under a node-operation cost model.

use crate::assignment::{hungarian, soft_objective, Assignment};
use crate::cost::{build_cost_matrix, CostMatrix, CostModel};
use crate::error::Result;
use crate::graph::Graph;
use crate::scalar::Scalar;

/// Exact GED of the node-operation program, with the optimal assignment and the
/// cost matrix it was solved on.
pub fn ged_hard_with_costs<T: Scalar>(
    source: &Graph<T>,
    target: &Graph<T>,
    model: &CostModel<T>,
) -> Result<(T, Assignment<T>, CostMatrix<T>)> {
    let cost = build_cost_matrix(model, source, target)?;
    let assignment = hungarian(&cost)?;
    Ok((assignment.objective(), assignment, cost))
}

pub fn ged_hard<T: Scalar>(source: &Graph<T>, target: &Graph<T>, model: &CostModel<T>) -> Result<(T, Assignment<T>)> {
    ged_hard_with_costs(source, target, model).map(|(d, a, _)| (d, a))
}

/// Entropic GED: `Σ C_ij X̃_ij` over non-dummy cells after `k` Sinkhorn rounds at
/// temperature `delta`.
pub fn ged_soft<T: Scalar>(source: &Graph<T>, target: &Graph<T>, model: &CostModel<T>, delta: T, k: usize) -> Result<T> {
    let cost = build_cost_matrix(model, source, target)?;
    soft_objective(&cost, delta, k)
}
