#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use editpath::cost::{insertion_deletion_cost, substitution_cost, CostModel, Role};
use editpath::learner::{grad, soft_distance, triplet_loss, CostModelParams, GraphPass, TrainConfig, Triplet};
use editpath::Graph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FEATURE_DIM: usize = 3;

/// Random graph with up to `max_nodes` nodes, small one-hot-ish features and
/// optional 2-dimensional edge attributes.
pub fn random_graph(rng: &mut impl Rng, min_nodes: usize, max_nodes: usize, edge_attrs: bool) -> Graph {
    let n = rng.random_range(min_nodes..=max_nodes);
    let rows = (0..n)
        .map(|_| {
            let mut row = vec![0.0; FEATURE_DIM];
            row[rng.random_range(0..FEATURE_DIM)] = 1.0;
            row
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.4) {
                let attr = edge_attrs.then(|| vec![rng.random_range(0..3) as f64, rng.random::<f64>()]);
                edges.push((u, v, attr));
            }
        }
    }
    Graph::from_rows(FEATURE_DIM, rows, edges).unwrap()
}

/// Continuous-feature variant used where ties should be rare.
pub fn random_dense_graph(rng: &mut impl Rng, min_nodes: usize, max_nodes: usize) -> Graph {
    let n = rng.random_range(min_nodes..=max_nodes);
    let rows = (0..n)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.5) {
                edges.push((u, v, None));
            }
        }
    }
    Graph::from_rows(FEATURE_DIM, rows, edges).unwrap()
}

pub fn random_learned(rng: &mut impl Rng, hidden: usize) -> CostModel {
    CostModel::learned(CostModelParams::init(FEATURE_DIM, hidden, 2, rng.random()))
}

/// Minimum over every partial injection source → target of
/// substitutions + deletions of unmatched sources + insertions of unmatched targets.
/// Uses only the per-node cost primitives, never the assembled matrix.
pub fn brute_force_ged(source: &Graph, target: &Graph, model: &CostModel) -> f64 {
    let hs = model.embed(source).unwrap();
    let ht = model.embed(target).unwrap();
    let emb = hs.as_ref().zip(ht.as_ref());
    let (n, m) = (source.node_count(), target.node_count());
    let sub: Vec<Vec<f64>> = (0..n)
        .map(|u| (0..m).map(|v| substitution_cost(model, source, u, target, v, emb).unwrap()).collect())
        .collect();
    let del: Vec<f64> = (0..n)
        .map(|u| insertion_deletion_cost(model, source, u, Role::Delete, hs.as_ref()).unwrap())
        .collect();
    let ins: Vec<f64> = (0..m)
        .map(|v| insertion_deletion_cost(model, target, v, Role::Insert, ht.as_ref()).unwrap())
        .collect();

    fn go(u: usize, used: &mut Vec<bool>, acc: f64, sub: &[Vec<f64>], del: &[f64], ins: &[f64], best: &mut f64) {
        if u == sub.len() {
            let inserted: f64 = used.iter().zip(ins).filter(|(u, _)| !**u).map(|(_, c)| c).sum();
            *best = best.min(acc + inserted);
            return;
        }
        go(u + 1, used, acc + del[u], sub, del, ins, best);
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                go(u + 1, used, acc + sub[u][v], sub, del, ins, best);
                used[v] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, &mut vec![false; m], 0.0, &sub, &del, &ins, &mut best);
    best
}

/// Writes a small TUDataset-format corpus with node labels, edge labels and two
/// graph classes; returns the graph count.
pub fn write_tudataset(dir: &Path, name: &str, rng: &mut impl Rng, graphs: usize) -> usize {
    let (mut a, mut indicator, mut graph_labels, mut node_labels, mut edge_labels) =
        (String::new(), String::new(), String::new(), String::new(), String::new());
    let mut offset = 1;
    for g in 0..graphs {
        let n = rng.random_range(2..=6);
        for _ in 0..n {
            writeln!(indicator, "{}", g + 1).unwrap();
            writeln!(node_labels, "{}", rng.random_range(0..3)).unwrap();
        }
        for u in 0..n {
            for v in u + 1..n {
                if v == u + 1 || rng.random_bool(0.3) {
                    let label = rng.random_range(0..2);
                    writeln!(a, "{}, {}", offset + u, offset + v).unwrap();
                    writeln!(a, "{}, {}", offset + v, offset + u).unwrap();
                    writeln!(edge_labels, "{label}\n{label}").unwrap();
                }
            }
        }
        writeln!(graph_labels, "{}", if g % 2 == 0 { 1 } else { -1 }).unwrap();
        offset += n;
    }
    let file = |suffix: &str, body: &str| std::fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
    file("A", &a);
    file("graph_indicator", &indicator);
    file("graph_labels", &graph_labels);
    file("node_labels", &node_labels);
    file("edge_labels", &edge_labels);
    graphs
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_REL_TOL: f64 = 1e-3;

pub fn small_config(gamma: f64) -> TrainConfig {
    TrainConfig {
        hidden_dim: 8,
        sinkhorn_k: 10,
        delta: 0.1,
        gamma,
        ..TrainConfig::default()
    }
}

/// Largest per-coordinate relative error between the analytic gradient and central
/// differences of `triplet_loss`.
pub fn finite_difference_error(triplet: &Triplet<'_, f64>, params: &CostModelParams, config: &TrainConfig) -> f64 {
    let (_, analytic) = grad(triplet, params, config).unwrap();
    let analytic = analytic.flatten();
    let base = params.flatten();
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut at = |x: f64| {
            let mut flat = base.clone();
            flat[i] = x;
            probe.assign_flat(&flat).unwrap();
            triplet_loss(triplet, &probe, config).unwrap()
        };
        let numeric = (at(base[i] + FD_STEP) - at(base[i] - FD_STEP)) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

/// Half-scale initial parameters plus U(-0.05, 0.05) noise on every coordinate.
/// Fresh initialisations have zero biases, which puts nodes with all-zero inputs
/// exactly on a ReLU kink; the half scale keeps soft distances at a few units so the
/// loss is not quantised coarser than central differences can resolve.
pub fn general_position_params(rng: &mut ChaCha8Rng, hidden: usize) -> CostModelParams {
    let mut params = CostModelParams::init(FEATURE_DIM, hidden, 2, rng.random());
    let flat: Vec<f64> = params.flatten().iter().map(|x| 0.5 * x + rng.random_range(-0.05..0.05)).collect();
    params.assign_flat(&flat).unwrap();
    params
}

/// Triplet of small continuous-feature graphs, ordered so that d⁺ ≤ d⁻, with the
/// margin chosen to make the hinge active at exactly 1. The anchor is smaller than the
/// other two so insertions carry real transport mass; otherwise the head gradients
/// are of order exp(-cost/δ) and fall below what central differences can resolve.
pub fn active_triplet(rng: &mut ChaCha8Rng, params: &CostModelParams) -> ([Graph; 3], TrainConfig) {
    let [anchor, x, y] = [
        random_dense_graph(rng, 2, 3),
        random_dense_graph(rng, 4, 5),
        random_dense_graph(rng, 4, 5),
    ];
    let probe = small_config(1.0);
    let dx = soft_distance(&anchor, &x, params, &probe).unwrap();
    let dy = soft_distance(&anchor, &y, params, &probe).unwrap();
    let (graphs, gap) = if dx <= dy { ([anchor, x, y], dy - dx) } else { ([anchor, y, x], dx - dy) };
    (graphs, small_config(gap + 1.0))
}

fn relu_signs(graphs: &[Graph; 3], params: &CostModelParams) -> Vec<bool> {
    let mut signs = Vec::new();
    for g in graphs {
        let pass = GraphPass::new(g, params).unwrap();
        for z in pass.embed.pre_activations() {
            signs.extend(z.iter().map(|&x| x > 0.0));
        }
        signs.extend(pass.head.hidden_pre_activation().iter().map(|&x| x > 0.0));
    }
    signs
}

/// True when no coordinate's ±`FD_STEP` stencil flips a ReLU, i.e. the loss is smooth
/// over every stencil the finite-difference oracle evaluates.
pub fn stencil_is_smooth(graphs: &[Graph; 3], params: &CostModelParams) -> bool {
    let base = relu_signs(graphs, params);
    let flat = params.flatten();
    let mut probe = params.clone();
    (0..flat.len()).all(|i| {
        [FD_STEP, -FD_STEP].iter().all(|&h| {
            let mut moved = flat.clone();
            moved[i] += h;
            probe.assign_flat(&moved).unwrap();
            relu_signs(graphs, &probe) == base
        })
    })
}

/// A triplet the finite-difference oracle can judge, plus how many draws were
/// rejected for having a ReLU kink inside some stencil.
pub fn checkable_triplet(rng: &mut ChaCha8Rng) -> (CostModelParams, [Graph; 3], TrainConfig, usize) {
    let mut rejected = 0;
    loop {
        let params = general_position_params(rng, 8);
        let (graphs, config) = active_triplet(rng, &params);
        if stencil_is_smooth(&graphs, &params) {
            return (params, graphs, config, rejected);
        }
        rejected += 1;
    }
}
