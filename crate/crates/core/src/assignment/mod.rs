//! Exact and entropic solutions of the GED assignment problem.

mod hungarian;
mod sinkhorn;

pub use hungarian::{hungarian, solve_square};
pub use sinkhorn::{sinkhorn, soft_objective, soft_objective_grad, SoftAssignment};

use ndarray::Array2;

use crate::cost::{cell_kind, CellKind, CostMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A node operation selected by an assignment, in source/target node indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeOp {
    Substitute(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// A complete permutation of the `s×s` cost matrix that selects no forbidden cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T = f64> {
    n: usize,
    m: usize,
    /// `row_to_col[i]` is the column assigned to row `i`.
    row_to_col: Vec<usize>,
    objective: T,
}

impl<T: Scalar> Assignment<T> {
    /// Validates `row_to_col` against `cost` and computes the objective.
    pub fn new(cost: &CostMatrix<T>, row_to_col: Vec<usize>) -> Result<Self> {
        let s = cost.size();
        if row_to_col.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "assignment of {} rows for a {s}×{s} matrix",
                row_to_col.len()
            )));
        }
        let mut used = vec![false; s];
        let mut objective = T::zero();
        for (i, &j) in row_to_col.iter().enumerate() {
            if j >= s || std::mem::replace(&mut used[j], true) {
                return Err(Error::Structural("assignment is not a permutation".into()));
            }
            match cost.kind(i, j) {
                CellKind::Forbidden => {
                    return Err(Error::Structural(format!("forbidden cell ({i}, {j}) selected")))
                }
                CellKind::DummyDummy => {}
                _ => objective += cost.get(i, j).unwrap(),
            }
        }
        Ok(Assignment {
            n: cost.source_len(),
            m: cost.target_len(),
            row_to_col,
            objective,
        })
    }

    pub fn size(&self) -> usize {
        self.row_to_col.len()
    }

    pub fn source_len(&self) -> usize {
        self.n
    }

    pub fn target_len(&self) -> usize {
        self.m
    }

    pub fn row_to_col(&self) -> &[usize] {
        &self.row_to_col
    }

    /// Sum of assigned costs, dummy–dummy cells excluded.
    pub fn objective(&self) -> T {
        self.objective
    }

    /// One operation per assigned non-dummy cell, in row order.
    pub fn operations(&self) -> Vec<NodeOp> {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(i, &j)| match cell_kind(self.n, self.m, i, j) {
                CellKind::Substitution { source, target } => Some(NodeOp::Substitute(source, target)),
                CellKind::Deletion { source } => Some(NodeOp::Delete(source)),
                CellKind::Insertion { target } => Some(NodeOp::Insert(target)),
                _ => None,
            })
            .collect()
    }

    /// Target node assigned to each source node, `None` when deleted.
    pub fn source_to_target(&self) -> Vec<Option<usize>> {
        (0..self.n)
            .map(|i| (self.row_to_col[i] < self.m).then_some(self.row_to_col[i]))
            .collect()
    }

    /// 0/1 matrix over the full grid, dummy–dummy cells included.
    pub fn to_matrix(&self) -> Array2<T> {
        let s = self.size();
        let mut x = Array2::zeros((s, s));
        for (i, &j) in self.row_to_col.iter().enumerate() {
            x[[i, j]] = T::one();
        }
        x
    }
}

/// `‖X̃ − X‖_F` between a soft and a hard assignment on the full grid.
pub fn frobenius_gap<T: Scalar>(soft: &SoftAssignment<T>, hard: &Assignment<T>) -> Result<T> {
    let x = soft.matrix();
    if x.nrows() != hard.size() {
        return Err(Error::DimensionMismatch(format!(
            "soft assignment {}×{} vs hard assignment of size {}",
            x.nrows(),
            x.ncols(),
            hard.size()
        )));
    }
    Ok(frobenius_distance(x, &hard.to_matrix()))
}

pub(crate) fn frobenius_distance<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> T {
    a.iter().zip(b.iter()).map(|(&p, &q)| (p - q) * (p - q)).sum::<T>().sqrt()
}
