//! Synthetic lollipop graphs: an `m`-clique head with an `n`-node chain tail.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, DEGREE_BUCKETS};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LollipopSpec {
    pub head_sizes: Vec<usize>,
    pub tail_lengths: Vec<usize>,
    pub count_per_combination: usize,
    /// Recorded for provenance; construction itself is deterministic.
    pub seed: u64,
}

impl LollipopSpec {
    pub fn validate(&self) -> Result<()> {
        if self.head_sizes.is_empty() || self.tail_lengths.is_empty() {
            return Err(Error::InvalidArgument("head sizes and tail lengths must be nonempty".into()));
        }
        if let Some(m) = self.head_sizes.iter().find(|&&m| m < 3) {
            return Err(Error::InvalidArgument(format!("head size {m} < 3")));
        }
        if self.tail_lengths.contains(&0) {
            return Err(Error::InvalidArgument("tail length must be at least 1".into()));
        }
        if self.count_per_combination == 0 {
            return Err(Error::InvalidArgument("count per combination must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes `0..m` form the head; the tail chain hangs off node `m-1`.
pub fn gen_lollipop<T: Scalar>(m: usize, n: usize) -> Result<Graph<T>> {
    if m < 3 || n < 1 {
        return Err(Error::InvalidArgument(format!(
            "lollipop needs head >= 3 and tail >= 1, got ({m}, {n})"
        )));
    }
    let head = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v)));
    let tail = (m - 1..m + n - 1).map(|u| (u, u + 1));
    Graph::with_degree_features(m + n, head.chain(tail))
}

/// One graph per `(m, n, repetition)`, ordered by sorted `m`, then sorted `n`.
/// The class of a graph is the index of its head size in the sorted head sizes.
pub fn gen_lollipop_dataset<T: Scalar>(spec: &LollipopSpec) -> Result<LabeledDataset<T>> {
    spec.validate()?;
    let mut heads = spec.head_sizes.clone();
    heads.sort_unstable();
    heads.dedup();
    let mut tails = spec.tail_lengths.clone();
    tails.sort_unstable();
    tails.dedup();

    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    for (class, &m) in heads.iter().enumerate() {
        for &n in &tails {
            for _ in 0..spec.count_per_combination {
                graphs.push(gen_lollipop(m, n)?);
                labels.push(class);
            }
        }
    }
    LabeledDataset::new("lollipop", graphs, labels, heads.len(), DEGREE_BUCKETS)?
        .with_raw_labels(heads.iter().map(|&m| m as i64).collect())
}

/// Recovers `(m, n)` from a graph laid out by [`gen_lollipop`].
///
/// Returns `None` unless nodes `0..m` form a clique and the remaining nodes form the
/// chain `m-1, m, ..., m+n-1` with no other edges.
pub fn lollipop_shape<T: Scalar>(g: &Graph<T>) -> Option<(usize, usize)> {
    let total = g.node_count();
    let mut m = 0;
    while m < total && (0..m).all(|u| g.has_edge(u, m)) {
        m += 1;
    }
    if m < 3 || m == total {
        return None;
    }
    let n = total - m;
    if g.edge_count() != m * (m - 1) / 2 + n {
        return None;
    }
    (m - 1..total - 1)
        .all(|u| g.has_edge(u, u + 1))
        .then_some((m, n))
}
