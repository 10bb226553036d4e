//! Attributed undirected graphs.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Degrees at or above this value share the last one-hot bucket.
pub const DEGREE_CAP: usize = 20;
/// Width of the capped degree encoding: buckets `0..=DEGREE_CAP`.
pub const DEGREE_BUCKETS: usize = DEGREE_CAP + 1;

/// Canonical key of an undirected edge.
pub fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// An undirected graph with a feature vector per node and optional edge attributes.
///
/// Edges are stored under their canonical `(min, max)` key. All constructors run
/// [`Graph::validate`], so a value of this type always satisfies the invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T = f64> {
    features: Array2<T>,
    edges: BTreeMap<(usize, usize), Option<Vec<T>>>,
}

impl<T: Scalar> Graph<T> {
    pub fn new<I>(features: Array2<T>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Option<Vec<T>>)>,
    {
        let mut map = BTreeMap::new();
        for (u, v, attr) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if map.insert(edge_key(u, v), attr).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        let graph = Graph { features, edges: map };
        graph.validate()?;
        Ok(graph)
    }

    /// Builds a graph from per-node feature rows of common dimension `dim`.
    pub fn from_rows<I>(dim: usize, rows: Vec<Vec<T>>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Option<Vec<T>>)>,
    {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidGraph(format!(
                    "node {i} has feature dimension {}, expected {dim}",
                    row.len()
                )));
            }
            flat.extend(row);
        }
        let features = Array2::from_shape_vec((n, dim), flat)
            .map_err(|e| Error::InvalidGraph(e.to_string()))?;
        Self::new(features, edges)
    }

    /// Structure-only graph whose node features are capped degree one-hots.
    pub fn with_degree_features<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let edges: Vec<_> = edges.into_iter().map(|(u, v)| (u, v, None)).collect();
        let mut graph = Self::new(Array2::zeros((n, DEGREE_BUCKETS)), edges)?;
        let degrees = graph.degrees();
        for (v, d) in degrees.into_iter().enumerate() {
            graph.features[[v, d.min(DEGREE_CAP)]] = T::one();
        }
        Ok(graph)
    }

    pub fn empty(dim: usize) -> Self {
        Graph {
            features: Array2::zeros((0, dim)),
            edges: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let mut attr_dim = None;
        for (&(u, v), attr) in &self.edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside [0, {n})"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if let Some(a) = attr {
                match attr_dim {
                    None => attr_dim = Some(a.len()),
                    Some(d) if d != a.len() => {
                        return Err(Error::InvalidGraph(format!(
                            "edge ({u}, {v}) has attribute dimension {}, expected {d}",
                            a.len()
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn feature(&self, v: usize) -> ArrayView1<'_, T> {
        self.features.row(v)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical key order, `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Option<&[T]>)> + '_ {
        self.edges
            .iter()
            .map(|(&(u, v), a)| (u, v, a.as_deref()))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&edge_key(u, v))
    }

    /// `None` when the edge is absent, `Some(None)` when it carries no attributes.
    pub fn edge_attr(&self, u: usize, v: usize) -> Option<Option<&[T]>> {
        self.edges.get(&edge_key(u, v)).map(|a| a.as_deref())
    }

    pub fn edge_attr_dim(&self) -> Option<usize> {
        self.edges.values().flatten().map(Vec::len).next()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for &(u, v) in self.edges.keys() {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for &(u, v) in self.edges.keys() {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Relabels nodes so that old node `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation of the node set".into()));
        }
        let mut features = Array2::zeros(self.features.raw_dim());
        for (old, &new) in perm.iter().enumerate() {
            features.row_mut(new).assign(&self.features.row(old));
        }
        let edges = self
            .edges
            .iter()
            .map(|(&(u, v), a)| (perm[u], perm[v], a.clone()));
        Self::new(features, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph<f64> {
        Graph::with_degree_features(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(Graph::<f64>::with_degree_features(2, [(1, 1)]).is_err());
        assert!(Graph::<f64>::with_degree_features(2, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::<f64>::with_degree_features(2, [(0, 2)]).is_err());
    }

    #[test]
    fn rejects_ragged_features_and_attrs() {
        assert!(Graph::<f64>::from_rows(2, vec![vec![1.0, 0.0], vec![1.0]], []).is_err());
        let edges = [(0, 1, Some(vec![1.0])), (1, 2, Some(vec![1.0, 2.0]))];
        assert!(Graph::<f64>::from_rows(1, vec![vec![0.0]; 3], edges).is_err());
    }

    #[test]
    fn degree_features_are_capped_one_hots() {
        let g = path3();
        assert_eq!(g.feature_dim(), DEGREE_BUCKETS);
        assert_eq!(g.feature(1)[2], 1.0);
        assert_eq!(g.feature(0)[1], 1.0);
        assert_eq!(g.feature(0).sum(), 1.0);

        let star = Graph::<f64>::with_degree_features(26, (1..26).map(|v| (0, v))).unwrap();
        assert_eq!(star.feature(0)[DEGREE_CAP], 1.0);
    }

    #[test]
    fn edges_are_canonical() {
        let g = Graph::<f64>::with_degree_features(3, [(2, 1), (1, 0)]).unwrap();
        let keys: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(keys, vec![(0, 1), (1, 2)]);
        assert!(g.has_edge(2, 1));
    }

    #[test]
    fn permute_relabels_consistently() {
        let g = path3();
        let p = g.permute(&[2, 0, 1]).unwrap();
        assert!(p.has_edge(2, 0) && p.has_edge(0, 1));
        assert_eq!(p.feature(0), g.feature(1));
        assert!(g.permute(&[0, 0, 1]).is_err());
    }
}
