//! Forward passes with the intermediates needed for the matching backward passes.

use ndarray::{Array1, Array2, Axis};

use super::params::{CostModelParams, Gradient};
use crate::cost::{learned_substitution, CostMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

/// `(1+ε)·h_v + Σ_{u∈N(v)} h_u` for every node.
fn aggregate<T: Scalar>(adj: &[Vec<usize>], h: &Array2<T>, eps: T) -> Array2<T> {
    let mut out = h.mapv(|x| x * (T::one() + eps));
    for (v, neighbours) in adj.iter().enumerate() {
        for &u in neighbours {
            let row = h.row(u).to_owned();
            let mut target = out.row_mut(v);
            target += &row;
        }
    }
    out
}

/// Embedding pass of one graph.
#[derive(Clone, Debug)]
pub struct EmbedTape<T> {
    adj: Vec<Vec<usize>>,
    /// Aggregated input of each layer.
    aggregated: Vec<Array2<T>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<T>>,
    pub output: Array2<T>,
}

pub fn embed_with_tape<T: Scalar>(g: &Graph<T>, params: &CostModelParams<T>) -> Result<EmbedTape<T>> {
    if g.feature_dim() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "graph features have dimension {}, cost network expects {}",
            g.feature_dim(),
            params.input_dim()
        )));
    }
    let adj = g.adjacency();
    let mut h = g.features().clone();
    let mut aggregated = Vec::with_capacity(params.gnn_layers.len());
    let mut pre = Vec::with_capacity(params.gnn_layers.len());
    for layer in &params.gnn_layers {
        let agg = aggregate(&adj, &h, params.epsilon_gin);
        let z = agg.dot(&layer.weight.t()) + &layer.bias;
        h = z.mapv(|x| x.max(T::zero()));
        aggregated.push(agg);
        pre.push(z);
    }
    Ok(EmbedTape {
        adj,
        aggregated,
        pre,
        output: h,
    })
}

impl<T> EmbedTape<T> {
    /// Pre-activation of every layer, in layer order.
    pub fn pre_activations(&self) -> &[Array2<T>] {
        &self.pre
    }
}

/// Node embeddings: `L` rounds of `h ← ReLU(W·((1+ε)h_v + Σ_{u∈N(v)} h_u) + b)`.
pub fn gnn_embed<T: Scalar>(g: &Graph<T>, params: &CostModelParams<T>) -> Result<Array2<T>> {
    embed_with_tape(g, params).map(|t| t.output)
}

/// Accumulates parameter gradients of the embedding layers given `∂L/∂H`.
fn embed_backward<T: Scalar>(
    tape: &EmbedTape<T>,
    params: &CostModelParams<T>,
    mut d_h: Array2<T>,
    grad: &mut Gradient<T>,
) {
    for l in (0..params.gnn_layers.len()).rev() {
        let mut d_z = d_h;
        d_z.zip_mut_with(&tape.pre[l], |d, &z| {
            if z <= T::zero() {
                *d = T::zero();
            }
        });
        let g = &mut grad.0.gnn_layers[l];
        g.weight = &g.weight + &d_z.t().dot(&tape.aggregated[l]);
        g.bias = &g.bias + &d_z.sum_axis(Axis(0));
        if l == 0 {
            break;
        }
        let d_agg = d_z.dot(&params.gnn_layers[l].weight);
        // aggregation is symmetric in the adjacency, so its transpose is itself
        d_h = aggregate(&tape.adj, &d_agg, params.epsilon_gin);
    }
}

/// Insertion/deletion head over all nodes of a graph.
#[derive(Clone, Debug)]
pub struct HeadTape<T> {
    hidden_pre: Array2<T>,
    hidden: Array2<T>,
    out_pre: Array1<T>,
    pub costs: Array1<T>,
}

impl<T> HeadTape<T> {
    pub fn hidden_pre_activation(&self) -> &Array2<T> {
        &self.hidden_pre
    }
}

pub fn head_with_tape<T: Scalar>(h: &Array2<T>, params: &CostModelParams<T>) -> HeadTape<T> {
    let hidden_pre = h.dot(&params.insdel_hidden.weight.t()) + &params.insdel_hidden.bias;
    let hidden = hidden_pre.mapv(|x| x.max(T::zero()));
    let out_pre = hidden.dot(&params.insdel_out.weight.row(0)) + params.insdel_out.bias[0];
    let costs = out_pre.mapv(T::softplus);
    HeadTape {
        hidden_pre,
        hidden,
        out_pre,
        costs,
    }
}

/// Returns `∂L/∂H` contributed through the head and accumulates head gradients.
fn head_backward<T: Scalar>(
    tape: &HeadTape<T>,
    h: &Array2<T>,
    params: &CostModelParams<T>,
    d_costs: &Array1<T>,
    grad: &mut Gradient<T>,
) -> Array2<T> {
    let d_out: Array1<T> = d_costs
        .iter()
        .zip(tape.out_pre.iter())
        .map(|(&d, &z)| d * z.sigmoid())
        .collect();
    let g_out = &mut grad.0.insdel_out;
    let mut w_row = g_out.weight.row_mut(0);
    w_row += &tape.hidden.t().dot(&d_out);
    g_out.bias[0] += d_out.sum();

    let w2 = params.insdel_out.weight.row(0);
    let mut d_hidden = Array2::from_shape_fn(tape.hidden.dim(), |(i, j)| d_out[i] * w2[j]);
    d_hidden.zip_mut_with(&tape.hidden_pre, |d, &z| {
        if z <= T::zero() {
            *d = T::zero();
        }
    });
    let g_hidden = &mut grad.0.insdel_hidden;
    g_hidden.weight = &g_hidden.weight + &d_hidden.t().dot(h);
    g_hidden.bias = &g_hidden.bias + &d_hidden.sum_axis(Axis(0));
    d_hidden.dot(&params.insdel_hidden.weight)
}

/// Complete forward state of one graph under the learned cost.
#[derive(Clone, Debug)]
pub struct GraphPass<T> {
    pub embed: EmbedTape<T>,
    pub head: HeadTape<T>,
}

impl<T: Scalar> GraphPass<T> {
    pub fn new(g: &Graph<T>, params: &CostModelParams<T>) -> Result<Self> {
        let embed = embed_with_tape(g, params)?;
        let head = head_with_tape(&embed.output, params);
        Ok(GraphPass { embed, head })
    }

    pub fn embeddings(&self) -> &Array2<T> {
        &self.embed.output
    }

    pub fn zero_seed(&self) -> PassSeed<T> {
        PassSeed {
            d_embed: Array2::zeros(self.embed.output.dim()),
            d_costs: Array1::zeros(self.head.costs.len()),
        }
    }

    pub fn backward(&self, params: &CostModelParams<T>, seed: PassSeed<T>, grad: &mut Gradient<T>) {
        let mut d_h = seed.d_embed;
        d_h += &head_backward(&self.head, &self.embed.output, params, &seed.d_costs, grad);
        embed_backward(&self.embed, params, d_h, grad);
    }
}

/// Upstream gradients arriving at a [`GraphPass`].
#[derive(Clone, Debug)]
pub struct PassSeed<T> {
    pub d_embed: Array2<T>,
    pub d_costs: Array1<T>,
}

/// Learned cost matrix from two forward passes.
pub fn cost_matrix_from_passes<T: Scalar>(source: &GraphPass<T>, target: &GraphPass<T>) -> Result<CostMatrix<T>> {
    let (hs, ht) = (source.embeddings(), target.embeddings());
    let sub = Array2::from_shape_fn((hs.nrows(), ht.nrows()), |(i, j)| {
        learned_substitution(hs.row(i), ht.row(j))
    });
    if sub.iter().chain(source.head.costs.iter()).chain(target.head.costs.iter()).any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { stage: "cost matrix" });
    }
    CostMatrix::from_blocks(sub, source.head.costs.clone(), target.head.costs.clone())
}

/// Pushes `∂L/∂C` (dense, `s×s`) back onto the two graph passes' seeds.
pub fn cost_matrix_backward<T: Scalar>(
    cost: &CostMatrix<T>,
    d_cost: &Array2<T>,
    source: &GraphPass<T>,
    target: &GraphPass<T>,
    seed_s: &mut PassSeed<T>,
    seed_t: &mut PassSeed<T>,
) {
    let (n, m) = (cost.source_len(), cost.target_len());
    let (hs, ht) = (source.embeddings(), target.embeddings());
    for i in 0..n {
        for j in 0..m {
            let d = d_cost[[i, j]];
            if d == T::zero() {
                continue;
            }
            let coef = d / cost.substitution()[[i, j]];
            for k in 0..hs.ncols() {
                let diff = coef * (hs[[i, k]] - ht[[j, k]]);
                seed_s.d_embed[[i, k]] += diff;
                seed_t.d_embed[[j, k]] -= diff;
            }
        }
        seed_s.d_costs[i] += d_cost[[i, m + i]];
    }
    for j in 0..m {
        seed_t.d_costs[j] += d_cost[[n + j, j]];
    }
}
