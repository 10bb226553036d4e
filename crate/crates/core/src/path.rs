//! Edit paths: ordered node operations and the graphs they pass through.
//!
//! Every node operation carries the edge edits it implies. After the node itself is
//! inserted, deleted or substituted, edges between it and already-processed nodes
//! are made to agree with the target: edges absent from the target are removed,
//! surviving edges take the target's attributes, and target edges to processed
//! nodes are inserted. Deletion removes all incident edges. Edges to nodes that have
//! not been processed yet are left alone, so once every operation has run the
//! current graph is exactly the target.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{Assignment, NodeOp};
use crate::cost::{CostMatrix, CostModel};
use crate::error::{Error, Result};
use crate::ged::ged_hard_with_costs;
use crate::graph::{edge_key, Graph};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EditOperation<T = f64> {
    pub op: NodeOp,
    pub cost: T,
}

/// How the operations of an assignment are ordered along the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderPolicy {
    Random(u64),
    /// Breadth-first discovery order on the target; deletions last.
    Bfs,
}

/// Target nodes in BFS discovery order from node 0, restarting at the lowest
/// undiscovered node for each further component.
pub fn bfs_order<T: Scalar>(g: &Graph<T>) -> Vec<usize> {
    let adj = g.adjacency();
    let mut seen = vec![false; g.node_count()];
    let mut order = Vec::with_capacity(g.node_count());
    for root in 0..g.node_count() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if !std::mem::replace(&mut seen[u], true) {
                    queue.push_back(u);
                }
            }
        }
    }
    order
}

fn op_cost<T: Scalar>(cost: &CostMatrix<T>, op: NodeOp) -> T {
    match op {
        NodeOp::Substitute(u, v) => cost.substitution()[[u, v]],
        NodeOp::Delete(u) => cost.deletion()[u],
        NodeOp::Insert(v) => cost.insertion()[v],
    }
}

pub fn assignment_to_operations<T: Scalar>(
    assignment: &Assignment<T>,
    cost: &CostMatrix<T>,
    target: &Graph<T>,
    policy: OrderPolicy,
) -> Vec<EditOperation<T>> {
    let mut ops = assignment.operations();
    match policy {
        OrderPolicy::Random(seed) => ops.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        OrderPolicy::Bfs => {
            let mut rank = vec![0; target.node_count()];
            for (pos, v) in bfs_order(target).into_iter().enumerate() {
                rank[v] = pos;
            }
            ops.sort_by_key(|op| match *op {
                NodeOp::Substitute(_, v) | NodeOp::Insert(v) => (0, rank[v]),
                NodeOp::Delete(u) => (1, u),
            });
        }
    }
    ops.into_iter()
        .map(|op| EditOperation {
            op,
            cost: op_cost(cost, op),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Still the source node with this index.
    Unprocessed(usize),
    /// Already turned into the target node with this index.
    Processed(usize),
}

#[derive(Clone, Debug)]
struct LiveNode<T> {
    features: Vec<T>,
    provenance: Provenance,
}

/// Intermediate graph of an edit path with per-node provenance.
#[derive(Clone, Debug)]
pub struct EditState<'a, T> {
    target: &'a Graph<T>,
    target_adj: Vec<Vec<usize>>,
    nodes: Vec<Option<LiveNode<T>>>,
    adj: Vec<BTreeSet<usize>>,
    edges: BTreeMap<(usize, usize), Option<Vec<T>>>,
    slot_of_target: Vec<Option<usize>>,
}

impl<'a, T: Scalar> EditState<'a, T> {
    pub fn new(source: &Graph<T>, target: &'a Graph<T>) -> Self {
        let nodes = (0..source.node_count())
            .map(|u| {
                Some(LiveNode {
                    features: source.feature(u).to_vec(),
                    provenance: Provenance::Unprocessed(u),
                })
            })
            .collect();
        let mut adj = vec![BTreeSet::new(); source.node_count()];
        let mut edges = BTreeMap::new();
        for (u, v, a) in source.edges() {
            adj[u].insert(v);
            adj[v].insert(u);
            edges.insert((u, v), a.map(<[T]>::to_vec));
        }
        EditState {
            target,
            target_adj: target.adjacency(),
            nodes,
            adj,
            edges,
            slot_of_target: vec![None; target.node_count()],
        }
    }

    pub fn provenance(&self) -> Vec<Provenance> {
        self.nodes.iter().flatten().map(|n| n.provenance).collect()
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a].remove(&b);
        self.adj[b].remove(&a);
        self.edges.remove(&edge_key(a, b));
    }

    fn unprocessed_slot(&self, u: usize) -> Result<usize> {
        match self.nodes.get(u).and_then(Option::as_ref) {
            Some(LiveNode {
                provenance: Provenance::Unprocessed(_),
                ..
            }) => Ok(u),
            _ => Err(Error::Consistency(format!("source node {u} was already processed"))),
        }
    }

    fn claim_target(&self, v: usize) -> Result<()> {
        match self.slot_of_target.get(v) {
            Some(None) => Ok(()),
            Some(Some(_)) => Err(Error::Consistency(format!("target node {v} is already present"))),
            None => Err(Error::IndexOutOfRange {
                index: v,
                len: self.slot_of_target.len(),
            }),
        }
    }

    /// Applies one node operation together with its implied edge edits.
    pub fn apply(&mut self, op: NodeOp) -> Result<()> {
        let (slot, v) = match op {
            NodeOp::Delete(u) => {
                let slot = self.unprocessed_slot(u)?;
                for w in std::mem::take(&mut self.adj[slot]) {
                    self.adj[w].remove(&slot);
                    self.edges.remove(&edge_key(slot, w));
                }
                self.nodes[slot] = None;
                return Ok(());
            }
            NodeOp::Insert(v) => {
                self.claim_target(v)?;
                self.nodes.push(None);
                self.adj.push(BTreeSet::new());
                (self.nodes.len() - 1, v)
            }
            NodeOp::Substitute(u, v) => {
                self.claim_target(v)?;
                (self.unprocessed_slot(u)?, v)
            }
        };
        self.nodes[slot] = Some(LiveNode {
            features: self.target.feature(v).to_vec(),
            provenance: Provenance::Processed(v),
        });
        self.slot_of_target[v] = Some(slot);

        let neighbours: Vec<usize> = self.adj[slot].iter().copied().collect();
        for w in neighbours {
            let Some(Provenance::Processed(t)) = self.nodes[w].as_ref().map(|n| n.provenance) else {
                continue;
            };
            match self.target.edge_attr(v, t) {
                None => self.remove_edge(slot, w),
                Some(attr) => {
                    self.edges.insert(edge_key(slot, w), attr.map(<[T]>::to_vec));
                }
            }
        }
        for &t in &self.target_adj[v] {
            if let Some(w) = self.slot_of_target[t] {
                let attr = self.target.edge_attr(v, t).unwrap().map(<[T]>::to_vec);
                self.adj[slot].insert(w);
                self.adj[w].insert(slot);
                self.edges.insert(edge_key(slot, w), attr);
            }
        }
        Ok(())
    }

    /// The current graph: processed nodes in target order, then unprocessed
    /// nodes in source order.
    pub fn to_graph(&self) -> Result<Graph<T>> {
        let mut live: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(slot, n)| {
                n.as_ref().map(|n| match n.provenance {
                    Provenance::Processed(t) => ((0, t), slot),
                    Provenance::Unprocessed(u) => ((1, u), slot),
                })
            })
            .map(|(key, slot)| (key.0 * self.nodes.len() + key.1, slot))
            .collect();
        live.sort_unstable();
        let mut index = vec![usize::MAX; self.nodes.len()];
        for (i, &(_, slot)) in live.iter().enumerate() {
            index[slot] = i;
        }
        let dim = self.target.feature_dim();
        let mut features = Array2::zeros((live.len(), dim));
        for (i, &(_, slot)) in live.iter().enumerate() {
            let node = self.nodes[slot].as_ref().unwrap();
            for (k, &x) in node.features.iter().enumerate() {
                features[[i, k]] = x;
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|(&(a, b), attr)| (index[a], index[b], attr.clone()));
        Graph::new(features, edges)
    }
}

#[derive(Clone, Debug)]
pub struct EditPath<T = f64> {
    pub source: Graph<T>,
    pub target: Graph<T>,
    pub operations: Vec<EditOperation<T>>,
    /// `prefix_costs[i]` is the summed cost of operations `0..=i`.
    pub prefix_costs: Vec<T>,
    pub total_cost: T,
    /// `states[m]` is the graph after the first `m` operations, when materialised.
    pub states: Option<Vec<Graph<T>>>,
}

impl<T: Scalar> EditPath<T> {
    pub fn from_operations(
        source: &Graph<T>,
        target: &Graph<T>,
        operations: Vec<EditOperation<T>>,
        total_cost: T,
        materialize: bool,
    ) -> Result<Self> {
        let mut acc = T::zero();
        let prefix_costs = operations
            .iter()
            .map(|o| {
                acc += o.cost;
                acc
            })
            .collect();
        let states = if materialize {
            let mut state = EditState::new(source, target);
            let mut states = Vec::with_capacity(operations.len() + 1);
            states.push(state.to_graph()?);
            for o in &operations {
                state.apply(o.op)?;
                states.push(state.to_graph()?);
            }
            Some(states)
        } else {
            None
        };
        Ok(EditPath {
            source: source.clone(),
            target: target.clone(),
            operations,
            prefix_costs,
            total_cost,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    /// Cost of the first `m` operations.
    pub fn prefix_cost(&self, m: usize) -> T {
        if m == 0 {
            T::zero()
        } else {
            self.prefix_costs[m - 1]
        }
    }

    /// Graph after the first `m` operations, replayed unless materialised.
    pub fn state(&self, m: usize) -> Result<Graph<T>> {
        if m > self.len() {
            return Err(Error::InvalidArgument(format!("prefix {m} exceeds path length {}", self.len())));
        }
        if let Some(states) = &self.states {
            return Ok(states[m].clone());
        }
        let mut state = EditState::new(&self.source, &self.target);
        for o in &self.operations[..m] {
            state.apply(o.op)?;
        }
        state.to_graph()
    }
}

/// Hungarian GED, then ordering, then (optionally) every intermediate graph.
pub fn build_edit_path<T: Scalar>(
    source: &Graph<T>,
    target: &Graph<T>,
    model: &CostModel<T>,
    policy: OrderPolicy,
    materialize: bool,
) -> Result<EditPath<T>> {
    let (total, assignment, cost) = ged_hard_with_costs(source, target, model)?;
    let ops = assignment_to_operations(&assignment, &cost, target, policy);
    EditPath::from_operations(source, target, ops, total, materialize)
}

/// Draws a random ordering seed; keeps callers from depending on `OrderPolicy` internals.
pub fn random_policy(rng: &mut impl Rng) -> OrderPolicy {
    OrderPolicy::Random(rng.random())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, edges: &[(usize, usize)]) -> Graph<f64> {
        Graph::from_rows(1, vec![vec![1.0]; n], edges.iter().map(|&(u, v)| (u, v, None))).unwrap()
    }

    #[test]
    fn insert_into_empty_graph() {
        let empty: Graph<f64> = Graph::empty(1);
        let target = uniform(1, &[]);
        let mut state = EditState::new(&empty, &target);
        state.apply(NodeOp::Insert(0)).unwrap();
        let g = state.to_graph().unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn substitution_keeps_edge_with_target_attributes() {
        let source = Graph::from_rows(1, vec![vec![0.0]; 2], [(0, 1, Some(vec![1.0]))]).unwrap();
        let target = Graph::from_rows(1, vec![vec![5.0]; 2], [(0, 1, Some(vec![9.0]))]).unwrap();
        let mut state = EditState::new(&source, &target);
        state.apply(NodeOp::Substitute(0, 0)).unwrap();
        // neighbour still unprocessed: source attributes survive
        assert_eq!(state.to_graph().unwrap().edge_attr(0, 1), Some(Some(&[1.0][..])));
        state.apply(NodeOp::Substitute(1, 1)).unwrap();
        let g = state.to_graph().unwrap();
        assert_eq!(g, target);
    }

    #[test]
    fn double_processing_is_an_error() {
        let g = uniform(2, &[(0, 1)]);
        let mut state = EditState::new(&g, &g);
        state.apply(NodeOp::Substitute(0, 0)).unwrap();
        assert!(matches!(state.apply(NodeOp::Substitute(0, 1)), Err(Error::Consistency(_))));
        assert!(matches!(state.apply(NodeOp::Insert(0)), Err(Error::Consistency(_))));
        assert!(matches!(state.apply(NodeOp::Delete(0)), Err(Error::Consistency(_))));
    }

    #[test]
    fn forced_operation_kinds() {
        let one = uniform(1, &[]);
        for policy in [OrderPolicy::Bfs, OrderPolicy::Random(3)] {
            let p = build_edit_path(&one, &one, &CostModel::Unit, policy, true).unwrap();
            assert_eq!(p.operations.len(), 1);
            assert_eq!(p.operations[0].op, NodeOp::Substitute(0, 0));
        }
        let two = uniform(2, &[(0, 1)]);
        let empty: Graph<f64> = Graph::empty(1);
        let p = build_edit_path(&two, &empty, &CostModel::Unit, OrderPolicy::Bfs, true).unwrap();
        assert_eq!(
            p.operations.iter().map(|o| o.op).collect::<Vec<_>>(),
            vec![NodeOp::Delete(0), NodeOp::Delete(1)]
        );
        assert_eq!(p.states.unwrap().last().unwrap(), &empty);
    }

    #[test]
    fn random_order_is_seeded() {
        let a = uniform(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let b = uniform(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let p1 = build_edit_path(&a, &b, &CostModel::Unit, OrderPolicy::Random(42), false).unwrap();
        let p2 = build_edit_path(&a, &b, &CostModel::Unit, OrderPolicy::Random(42), false).unwrap();
        assert_eq!(p1.operations, p2.operations);
    }

    #[test]
    fn triangle_to_edge_path() {
        let tri = uniform(3, &[(0, 1), (1, 2), (0, 2)]);
        let edge = uniform(2, &[(0, 1)]);
        let p = build_edit_path(&tri, &edge, &CostModel::Unit, OrderPolicy::Bfs, true).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.total_cost, 1.0);
        let subs = p.operations.iter().filter(|o| matches!(o.op, NodeOp::Substitute(..))).count();
        assert_eq!(subs, 2);
        assert!(p.operations.iter().all(|o| matches!(o.op, NodeOp::Substitute(..)) == (o.cost == 0.0)));
        assert_eq!(p.state(3).unwrap(), edge);
    }

    #[test]
    fn identical_graphs_never_change_structure() {
        let g = uniform(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]);
        let p = build_edit_path(&g, &g, &CostModel::Unit, OrderPolicy::Random(1), true).unwrap();
        assert_eq!(p.total_cost, 0.0);
        for s in p.states.unwrap() {
            assert_eq!(s.edge_count(), 4);
            assert_eq!(s.node_count(), 4);
        }
    }

    #[test]
    fn bfs_restarts_on_disconnected_targets() {
        let g = uniform(5, &[(0, 3), (1, 2)]);
        assert_eq!(bfs_order(&g), vec![0, 3, 1, 2, 4]);
    }
}
