//! Node-operation cost models and the block cost matrix.
//!
//! For a source graph with `n` nodes and a target with `m` nodes the cost matrix is
//! the `(n+m)×(n+m)` block matrix
//!
//! ```text
//! [ substitution (n×m) | deletion (n×n, diagonal)          ]
//! [ insertion (m×m, diagonal) | dummy–dummy (m×n)          ]
//! ```
//!
//! Off-diagonal cells of the deletion/insertion blocks and the whole dummy–dummy
//! block are forbidden. Forbidden cells are not stored as numbers; each solver
//! chooses its own numeric treatment.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::learner::{gnn_embed, CostModelParams};
use crate::scalar::Scalar;

/// Smoothing added under the square root of the learned substitution cost.
pub const NUMERIC_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum CostModel<T = f64> {
    /// Every insertion/deletion costs 1; substitution costs 1 iff the features differ.
    Unit,
    /// Euclidean distance between input features; insertion/deletion use `‖x‖₂`.
    FeatureDistance,
    /// Embedding distance for substitution and a softplus MLP for insertion/deletion.
    Learned(Arc<CostModelParams<T>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Insert,
    Delete,
}

/// What a cell of the block cost matrix stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Substitution { source: usize, target: usize },
    Deletion { source: usize },
    Insertion { target: usize },
    /// Bottom-right block: forbidden in the matrix, selectable at zero cost by solvers.
    DummyDummy,
    Forbidden,
}

impl<T: Scalar> CostModel<T> {
    pub fn learned(params: CostModelParams<T>) -> Self {
        CostModel::Learned(Arc::new(params))
    }

    /// Per-node embeddings for the learned model, `None` for the fixed models.
    pub fn embed(&self, g: &Graph<T>) -> Result<Option<Array2<T>>> {
        match self {
            CostModel::Learned(p) => gnn_embed(g, p).map(Some),
            _ => Ok(None),
        }
    }
}

pub fn learned_substitution<T: Scalar>(h_u: ArrayView1<'_, T>, h_v: ArrayView1<'_, T>) -> T {
    let sq: T = h_u.iter().zip(h_v.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    (sq + T::of(NUMERIC_EPSILON)).sqrt()
}

fn check_index<T: Scalar>(g: &Graph<T>, v: usize) -> Result<()> {
    if v >= g.node_count() {
        return Err(Error::IndexOutOfRange {
            index: v,
            len: g.node_count(),
        });
    }
    Ok(())
}

pub fn substitution_cost<T: Scalar>(
    model: &CostModel<T>,
    source: &Graph<T>,
    u: usize,
    target: &Graph<T>,
    v: usize,
    embeddings: Option<(&Array2<T>, &Array2<T>)>,
) -> Result<T> {
    check_index(source, u)?;
    check_index(target, v)?;
    let (xu, xv) = (source.feature(u), target.feature(v));
    if xu.len() != xv.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimensions {} and {}",
            xu.len(),
            xv.len()
        )));
    }
    Ok(match model {
        CostModel::Unit => {
            if xu == xv {
                T::zero()
            } else {
                T::one()
            }
        }
        CostModel::FeatureDistance => {
            let sq: T = xu.iter().zip(xv.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
            sq.sqrt()
        }
        CostModel::Learned(_) => {
            let (hs, ht) = embeddings.ok_or(Error::MissingEmbeddings)?;
            learned_substitution(hs.row(u), ht.row(v))
        }
    })
}

/// Insertion and deletion share one cost function, so `role` never changes the value.
pub fn insertion_deletion_cost<T: Scalar>(
    model: &CostModel<T>,
    graph: &Graph<T>,
    node: usize,
    _role: Role,
    embeddings: Option<&Array2<T>>,
) -> Result<T> {
    check_index(graph, node)?;
    Ok(match model {
        CostModel::Unit => T::one(),
        CostModel::FeatureDistance => graph.feature(node).iter().map(|&x| x * x).sum::<T>().sqrt(),
        CostModel::Learned(p) => {
            let h = embeddings.ok_or(Error::MissingEmbeddings)?;
            p.insdel_cost(h.row(node))
        }
    })
}

/// Finite cells of the block cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T = f64> {
    substitution: Array2<T>,
    deletion: Array1<T>,
    insertion: Array1<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn from_blocks(substitution: Array2<T>, deletion: Array1<T>, insertion: Array1<T>) -> Result<Self> {
        let (n, m) = substitution.dim();
        if deletion.len() != n || insertion.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "substitution block {n}×{m} with {} deletions and {} insertions",
                deletion.len(),
                insertion.len()
            )));
        }
        let all = substitution.iter().chain(deletion.iter()).chain(insertion.iter());
        for &c in all {
            if !c.is_finite() || c < T::zero() {
                return Err(Error::InvalidArgument(format!("cost {c} is not finite and nonnegative")));
            }
        }
        Ok(CostMatrix {
            substitution,
            deletion,
            insertion,
        })
    }

    pub fn source_len(&self) -> usize {
        self.deletion.len()
    }

    pub fn target_len(&self) -> usize {
        self.insertion.len()
    }

    /// Side length `n + m`.
    pub fn size(&self) -> usize {
        self.source_len() + self.target_len()
    }

    pub fn substitution(&self) -> &Array2<T> {
        &self.substitution
    }

    pub fn deletion(&self) -> &Array1<T> {
        &self.deletion
    }

    pub fn insertion(&self) -> &Array1<T> {
        &self.insertion
    }

    pub fn kind(&self, i: usize, j: usize) -> CellKind {
        cell_kind(self.source_len(), self.target_len(), i, j)
    }

    /// `None` marks a forbidden cell (including the dummy–dummy block).
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        match self.kind(i, j) {
            CellKind::Substitution { source, target } => Some(self.substitution[[source, target]]),
            CellKind::Deletion { source } => Some(self.deletion[source]),
            CellKind::Insertion { target } => Some(self.insertion[target]),
            CellKind::DummyDummy | CellKind::Forbidden => None,
        }
    }

    pub fn max_finite(&self) -> T {
        self.substitution
            .iter()
            .chain(self.deletion.iter())
            .chain(self.insertion.iter())
            .fold(T::zero(), |a, &b| a.max(b))
    }

    /// Dense `s×s` matrix with forbidden cells set to `forbidden` and dummy–dummy cells to `dummy`.
    pub fn dense(&self, forbidden: T, dummy: T) -> Array2<T> {
        let s = self.size();
        Array2::from_shape_fn((s, s), |(i, j)| match self.kind(i, j) {
            CellKind::DummyDummy => dummy,
            _ => self.get(i, j).unwrap_or(forbidden),
        })
    }
}

pub fn cell_kind(n: usize, m: usize, i: usize, j: usize) -> CellKind {
    match (i < n, j < m) {
        (true, true) => CellKind::Substitution { source: i, target: j },
        (true, false) if j - m == i => CellKind::Deletion { source: i },
        (false, true) if i - n == j => CellKind::Insertion { target: j },
        (false, false) => CellKind::DummyDummy,
        _ => CellKind::Forbidden,
    }
}

pub fn build_cost_matrix<T: Scalar>(
    model: &CostModel<T>,
    source: &Graph<T>,
    target: &Graph<T>,
) -> Result<CostMatrix<T>> {
    let hs = model.embed(source)?;
    let ht = model.embed(target)?;
    build_cost_matrix_with(model, source, target, hs.as_ref().zip(ht.as_ref()))
}

/// As [`build_cost_matrix`] with precomputed embeddings (required for learned costs).
pub fn build_cost_matrix_with<T: Scalar>(
    model: &CostModel<T>,
    source: &Graph<T>,
    target: &Graph<T>,
    embeddings: Option<(&Array2<T>, &Array2<T>)>,
) -> Result<CostMatrix<T>> {
    if source.feature_dim() != target.feature_dim() {
        return Err(Error::DimensionMismatch(format!(
            "source feature dimension {} vs target {}",
            source.feature_dim(),
            target.feature_dim()
        )));
    }
    let (n, m) = (source.node_count(), target.node_count());
    let mut substitution = Array2::zeros((n, m));
    for u in 0..n {
        for v in 0..m {
            substitution[[u, v]] = substitution_cost(model, source, u, target, v, embeddings)?;
        }
    }
    let deletion = (0..n)
        .map(|u| insertion_deletion_cost(model, source, u, Role::Delete, embeddings.map(|e| e.0)))
        .collect::<Result<Array1<T>>>()?;
    let insertion = (0..m)
        .map(|v| insertion_deletion_cost(model, target, v, Role::Insert, embeddings.map(|e| e.1)))
        .collect::<Result<Array1<T>>>()?;
    CostMatrix::from_blocks(substitution, deletion, insertion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::CostModelParams;

    fn single(feature: Vec<f64>) -> Graph<f64> {
        let d = feature.len();
        Graph::from_rows(d, vec![feature], []).unwrap()
    }

    #[test]
    fn unit_and_feature_distance_costs() {
        let a = single(vec![1.0, 0.0]);
        let b = single(vec![0.0, 1.0]);
        let unit = CostModel::Unit;
        assert_eq!(substitution_cost(&unit, &a, 0, &a, 0, None).unwrap(), 0.0);
        assert_eq!(substitution_cost(&unit, &a, 0, &b, 0, None).unwrap(), 1.0);
        assert_eq!(insertion_deletion_cost(&unit, &a, 0, Role::Insert, None).unwrap(), 1.0);

        let fd = CostModel::FeatureDistance;
        let d = substitution_cost(&fd, &a, 0, &b, 0, None).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let zero = single(vec![0.0, 0.0]);
        assert_eq!(insertion_deletion_cost(&fd, &zero, 0, Role::Delete, None).unwrap(), 0.0);
    }

    #[test]
    fn learned_costs_need_embeddings() {
        let a = single(vec![1.0, 0.0]);
        let model = CostModel::learned(CostModelParams::init(2, 4, 1, 3));
        assert!(matches!(
            substitution_cost(&model, &a, 0, &a, 0, None),
            Err(Error::MissingEmbeddings)
        ));
        let h = model.embed(&a).unwrap().unwrap();
        let c = substitution_cost(&model, &a, 0, &a, 0, Some((&h, &h))).unwrap();
        assert!((c - 1e-6).abs() < 1e-12);
        let ins = insertion_deletion_cost(&model, &a, 0, Role::Insert, Some(&h)).unwrap();
        let del = insertion_deletion_cost(&model, &a, 0, Role::Delete, Some(&h)).unwrap();
        assert_eq!(ins, del);
        assert!(ins > 0.0);
    }

    #[test]
    fn index_errors() {
        let a = single(vec![1.0]);
        assert!(matches!(
            substitution_cost(&CostModel::Unit, &a, 1, &a, 0, None),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn single_node_matrix_layout() {
        let a = single(vec![1.0]);
        let c = build_cost_matrix(&CostModel::Unit, &a, &a).unwrap();
        assert_eq!(c.size(), 2);
        assert_eq!(c.get(0, 0), Some(0.0));
        assert_eq!(c.get(0, 1), Some(1.0));
        assert_eq!(c.get(1, 0), Some(1.0));
        assert_eq!(c.get(1, 1), None);
        assert_eq!(c.kind(1, 1), CellKind::DummyDummy);
    }

    #[test]
    fn two_by_one_layout() {
        let s = Graph::from_rows(1, vec![vec![1.0], vec![2.0]], []).unwrap();
        let t = single(vec![3.0]);
        let c = build_cost_matrix(&CostModel::Unit, &s, &t).unwrap();
        let finite: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| c.get(i, j).is_some())
            .collect();
        // 1-based (1,1),(2,1),(1,2),(2,3),(3,1)
        assert_eq!(finite, vec![(0, 0), (0, 1), (1, 0), (1, 2), (2, 0)]);
        assert!(finite.iter().all(|&(i, j)| c.get(i, j) == Some(1.0)));
    }

    #[test]
    fn empty_source() {
        let s: Graph<f64> = Graph::empty(1);
        let t = Graph::from_rows(1, vec![vec![1.0], vec![2.0]], []).unwrap();
        let c = build_cost_matrix(&CostModel::Unit, &s, &t).unwrap();
        let finite = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .filter(|&(i, j)| c.get(i, j).is_some())
            .count();
        assert_eq!(finite, 2);
        assert_eq!(c.substitution().len(), 0);
    }
}
