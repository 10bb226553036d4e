mod common;

use common::{brute_force_ged, random_dense_graph, random_graph, random_learned};
use editpath::assignment::{frobenius_gap, hungarian, sinkhorn, soft_objective};
use editpath::cost::{build_cost_matrix, CellKind, CostMatrix, CostModel};
use editpath::ged::{ged_hard, ged_soft};
use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hungarian_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..150 {
        let a = random_graph(&mut rng, 0, 5, false);
        let b = random_graph(&mut rng, 0, 5, false);
        let model = if round % 2 == 0 { CostModel::Unit } else { random_learned(&mut rng, 6) };
        let (ged, assignment) = ged_hard(&a, &b, &model).unwrap();
        let oracle = brute_force_ged(&a, &b, &model);
        assert!((ged - oracle).abs() <= 1e-9, "round {round}: {ged} vs {oracle}");
        assert_eq!(ged, assignment.objective());
    }
}

#[test]
fn feature_distance_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let a = random_dense_graph(&mut rng, 1, 5);
        let b = random_dense_graph(&mut rng, 1, 5);
        let ged = ged_hard(&a, &b, &CostModel::FeatureDistance).unwrap().0;
        assert!((ged - brute_force_ged(&a, &b, &CostModel::FeatureDistance)).abs() <= 1e-9);
    }
}

#[test]
fn ged_is_symmetric_and_zero_on_self() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let model = random_learned(&mut rng, 8);
    for _ in 0..40 {
        let a = random_graph(&mut rng, 1, 6, false);
        let b = random_graph(&mut rng, 1, 6, false);
        for m in [&CostModel::Unit, &model] {
            let ab = ged_hard(&a, &b, m).unwrap().0;
            let ba = ged_hard(&b, &a, m).unwrap().0;
            assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab.abs()));
        }
        assert_eq!(ged_hard(&a, &a, &CostModel::Unit).unwrap().0, 0.0);
    }
}

#[test]
fn ged_is_invariant_to_node_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let model = random_learned(&mut rng, 8);
    for _ in 0..30 {
        let a = random_graph(&mut rng, 1, 6, true);
        let b = random_graph(&mut rng, 1, 6, true);
        let mut perm: Vec<usize> = (0..a.node_count()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let pa = a.permute(&perm).unwrap();
        for m in [&CostModel::Unit, &model] {
            let before = ged_hard(&a, &b, m).unwrap().0;
            let after = ged_hard(&pa, &b, m).unwrap().0;
            assert!((before - after).abs() <= 1e-9 * (1.0 + before.abs()), "{before} vs {after}");
        }
    }
}

fn assert_doubly_stochastic(cost: &editpath::CostMatrix, k: usize) {
    let soft = sinkhorn(cost, 0.1, k).unwrap();
    let x = soft.matrix();
    for line in x.rows().into_iter().chain(x.columns()) {
        assert!((line.sum() - 1.0).abs() <= 1e-3, "marginal {}", line.sum());
    }
    for ((i, j), &v) in x.indexed_iter() {
        if cost.kind(i, j) == CellKind::Forbidden {
            assert_eq!(v, 0.0);
        }
    }
}

// Convergence speed depends on cost/temperature: entries on the scale of δ settle
// within 50 rounds, unit costs (10δ) need a few hundred.
#[test]
fn sinkhorn_is_doubly_stochastic_and_respects_forbidden_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let (n, m) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let mut draw = |len| Array1::from_shape_fn(len, |_| 0.2 * rng.random::<f64>());
        let (del, ins, flat) = (draw(n), draw(m), draw(n * m));
        let cost = CostMatrix::from_blocks(flat.into_shape_with_order((n, m)).unwrap(), del, ins).unwrap();
        assert_doubly_stochastic(&cost, 50);
    }
    for _ in 0..40 {
        let a = random_graph(&mut rng, 1, 6, false);
        let b = random_graph(&mut rng, 1, 6, false);
        assert_doubly_stochastic(&build_cost_matrix(&CostModel::Unit, &a, &b).unwrap(), 500);
    }
}

#[test]
fn forbidden_cells_carry_no_mass_for_learned_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let model = random_learned(&mut rng, 8);
    for _ in 0..40 {
        let a = random_graph(&mut rng, 1, 6, false);
        let b = random_graph(&mut rng, 1, 6, false);
        let cost = build_cost_matrix(&model, &a, &b).unwrap();
        let soft = sinkhorn(&cost, 0.1, 10).unwrap();
        for ((i, j), &v) in soft.matrix().indexed_iter() {
            assert!(v >= 0.0);
            if cost.kind(i, j) == CellKind::Forbidden {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn soft_objective_approaches_hard_as_temperature_drops() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let model = random_learned(&mut rng, 8);
    for _ in 0..20 {
        let a = random_dense_graph(&mut rng, 2, 5);
        let b = random_dense_graph(&mut rng, 2, 5);
        let hard = ged_hard(&a, &b, &model).unwrap().0;
        let soft = ged_soft(&a, &b, &model, 1e-3, 2000).unwrap();
        assert!((soft - hard).abs() <= 1e-2 * (1.0 + hard), "soft {soft} hard {hard}");
    }
}

/// Identical-graph cost matrix: free diagonal substitutions, unit cost elsewhere.
fn dominant_diagonal(n: usize) -> CostMatrix {
    let sub = ndarray::Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 });
    CostMatrix::from_blocks(sub, Array1::ones(n), Array1::ones(n)).unwrap()
}

fn gap_outside_dummy_block(cost: &CostMatrix, k: usize) -> f64 {
    let hard = hungarian(cost).unwrap().to_matrix();
    let soft = sinkhorn(cost, 0.1, k).unwrap();
    soft.matrix()
        .indexed_iter()
        .filter(|&((i, j), _)| cost.kind(i, j) != CellKind::DummyDummy)
        .map(|((i, j), &x)| (x - hard[[i, j]]).powi(2))
        .sum::<f64>()
        .sqrt()
}

// Identical graphs give a symmetric problem that Sinkhorn settles in one round; the
// remaining gap is entropic blur of order exp(-margin/δ), not an iteration effect.
#[test]
fn dominant_diagonal_gap_is_negligible_at_every_k() {
    let cost = dominant_diagonal(1);
    let hard = hungarian(&cost).unwrap();
    for k in [1, 10, 50] {
        assert!(frobenius_gap(&sinkhorn(&cost, 0.1, k).unwrap(), &hard).unwrap() < 1e-3);
    }
    for n in 2..=5 {
        for k in [1, 10, 50] {
            assert!(gap_outside_dummy_block(&dominant_diagonal(n), k) < 1e-3);
        }
    }
}

#[test]
fn mean_gap_falls_between_one_and_ten_rounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = random_learned(&mut rng, 8);
    let (mut g1, mut g10) = (0.0, 0.0);
    for _ in 0..100 {
        let a = random_dense_graph(&mut rng, 2, 6);
        let b = random_dense_graph(&mut rng, 2, 6);
        let cost = build_cost_matrix(&model, &a, &b).unwrap();
        let hard = hungarian(&cost).unwrap();
        g1 += frobenius_gap(&sinkhorn(&cost, 0.1, 1).unwrap(), &hard).unwrap();
        g10 += frobenius_gap(&sinkhorn(&cost, 0.1, 10).unwrap(), &hard).unwrap();
    }
    assert!(g10 < g1, "k=1 {g1} k=10 {g10}");
}

#[test]
fn soft_objective_is_finite_for_extreme_temperatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let a = random_graph(&mut rng, 3, 5, false);
    let b = random_graph(&mut rng, 3, 5, false);
    let cost = build_cost_matrix(&CostModel::Unit, &a, &b).unwrap();
    for delta in [1e-4, 1e-2, 1.0, 1e4] {
        assert!(soft_objective(&cost, delta, 20).unwrap().is_finite());
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..20 {
        let a = random_graph(&mut rng, 1, 5, false);
        let b = random_graph(&mut rng, 1, 5, false);
        let wide = ged_hard(&a, &b, &CostModel::Unit).unwrap().0;
        let narrow = ged_hard(&to_f32(&a), &to_f32(&b), &CostModel::Unit).unwrap().0;
        assert_eq!(wide as f32, narrow);
    }
}

fn to_f32(g: &editpath::Graph) -> editpath::Graph32 {
    editpath::Graph32::new(
        g.features().mapv(|x| x as f32),
        g.edges().map(|(u, v, a)| (u, v, a.map(|a| a.iter().map(|&x| x as f32).collect()))),
    )
    .unwrap()
}
