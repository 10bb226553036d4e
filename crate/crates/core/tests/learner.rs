mod common;

use common::{checkable_triplet, finite_difference_error, random_dense_graph, small_config, FD_REL_TOL, FEATURE_DIM};
use editpath::cost::{build_cost_matrix, CostModel};
use editpath::learner::{gnn_embed, grad, train_cost, triplet_loss, Checkpoint, CostModelParams, TrainConfig, Triplet};
use editpath::lollipop::{gen_lollipop_dataset, LollipopSpec};
use editpath::{Graph, LabeledDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for round in 0..5 {
        let (params, [a, p, n], config, _) = checkable_triplet(&mut rng);
        let t = Triplet { anchor: &a, positive: &p, negative: &n, labels: [0, 0, 1] };
        let err = finite_difference_error(&t, &params, &config);
        assert!(err <= FD_REL_TOL, "round {round}: relative error {err}");
    }
}

#[test]
fn inactive_hinge_gives_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let params = CostModelParams::init(FEATURE_DIM, 8, 2, 1);
    let a = random_dense_graph(&mut rng, 3, 4);
    let far = random_dense_graph(&mut rng, 5, 5);
    let config = small_config(0.0);
    // positive = anchor itself, so d⁺ is tiny and the hinge is flat at zero
    let t = Triplet { anchor: &a, positive: &a, negative: &far, labels: [0, 0, 1] };
    let (loss, g) = grad(&t, &params, &config).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.flatten().iter().all(|&x| x == 0.0));
}

#[test]
fn unused_input_dimension_gets_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let pad = |g: Graph| {
        let rows = g.features().rows().into_iter().map(|r| {
            let mut row = r.to_vec();
            row.push(0.0);
            row
        });
        Graph::from_rows(FEATURE_DIM + 1, rows.collect(), g.edges().map(|(u, v, _)| (u, v, None))).unwrap()
    };
    let params = CostModelParams::init(FEATURE_DIM + 1, 8, 2, 9);
    let graphs = [0, 1, 2].map(|_| pad(random_dense_graph(&mut rng, 2, 5)));
    let config = small_config(100.0);
    let t = Triplet { anchor: &graphs[0], positive: &graphs[1], negative: &graphs[2], labels: [1, 1, 0] };
    let (loss, g) = grad(&t, &params, &config).unwrap();
    assert!(loss > 0.0);
    let first = &g.0.gnn_layers[0].weight;
    assert!(first.column(FEATURE_DIM).iter().all(|&x| x == 0.0));
    assert!(first.iter().any(|&x| x != 0.0));
}

#[test]
fn triplet_loss_rejects_bad_labels_and_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let params = CostModelParams::init(FEATURE_DIM, 8, 2, 2);
    let graphs = [0, 1, 2].map(|_| random_dense_graph(&mut rng, 1, 5));
    let config = small_config(1.0);
    let bad = Triplet { anchor: &graphs[0], positive: &graphs[1], negative: &graphs[2], labels: [0, 1, 1] };
    assert!(triplet_loss(&bad, &params, &config).is_err());
    let ok = Triplet { labels: [0, 0, 1], ..bad };
    assert!(triplet_loss(&ok, &params, &config).unwrap() >= 0.0);
}

#[test]
fn embeddings_follow_node_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let params = CostModelParams::init(FEATURE_DIM, 8, 2, 3);
    for _ in 0..10 {
        let g = random_dense_graph(&mut rng, 2, 6);
        let mut perm: Vec<usize> = (0..g.node_count()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let h = gnn_embed(&g, &params).unwrap();
        let hp = gnn_embed(&g.permute(&perm).unwrap(), &params).unwrap();
        for (v, &pv) in perm.iter().enumerate() {
            for (x, y) in h.row(v).iter().zip(hp.row(pv)) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}

#[test]
fn checkpoint_round_trip_reproduces_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let params = CostModelParams::init(FEATURE_DIM, 8, 2, 4);
    let checkpoint = Checkpoint { config: small_config(1.0), params: params.clone(), epoch: 7, val_loss: 0.25 };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, checkpoint);
    let (a, b) = (random_dense_graph(&mut rng, 3, 5), random_dense_graph(&mut rng, 3, 5));
    let before = build_cost_matrix(&CostModel::learned(params), &a, &b).unwrap();
    let after = build_cost_matrix(&CostModel::learned(loaded.params), &a, &b).unwrap();
    assert_eq!(before, after);
}

fn tiny_lollipops() -> LabeledDataset {
    gen_lollipop_dataset::<f64>(&LollipopSpec {
        head_sizes: vec![3, 5],
        tail_lengths: vec![1, 2, 3, 4, 5],
        count_per_combination: 2,
        seed: 1,
    })
    .unwrap()
    .stratified_split([0.7, 0.1, 0.2], 1)
    .unwrap()
}

#[test]
fn training_is_deterministic_and_selection_never_worsens_validation() {
    let ds = tiny_lollipops();
    let config = TrainConfig { epochs: 4, hidden_dim: 8, seed: 5, ..TrainConfig::default() };
    let first = train_cost(&ds, &config).unwrap();
    let second = train_cost(&ds, &config).unwrap();
    assert_eq!(first.history, second.history);
    assert_eq!(first.best_params, second.best_params);
    assert_eq!(first.history.epochs.len(), 4);
    assert_eq!(first.history.records().count(), 5);
    let baseline = first.history.baseline.unwrap().val_loss;
    assert!(first.best_val_loss <= baseline);
}

#[test]
fn training_needs_two_classes() {
    let ds = gen_lollipop_dataset::<f64>(&LollipopSpec {
        head_sizes: vec![4],
        tail_lengths: vec![1, 2, 3],
        count_per_combination: 2,
        seed: 1,
    })
    .unwrap()
    .stratified_split([0.7, 0.1, 0.2], 1)
    .unwrap();
    assert!(train_cost(&ds, &TrainConfig { epochs: 1, ..TrainConfig::default() }).is_err());
}
