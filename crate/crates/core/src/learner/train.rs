//! Training loop with per-epoch triplet resampling and validation-based selection.

use log::{info, warn};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamState};
use super::params::CostModelParams;
use super::triplet::{grad, triplet_loss, Triplet};
use super::TrainConfig;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dataset indices of an (anchor, positive, negative) triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripletIndex {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Epoch-0 evaluation of the initial parameters followed by one record per epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub baseline: Option<EpochRecord>,
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// Baseline first, then every trained epoch.
    pub fn records(&self) -> impl Iterator<Item = &EpochRecord> {
        self.baseline.iter().chain(&self.epochs)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T = f64> {
    pub best_params: CostModelParams<T>,
    /// 0 when the initial parameters were never beaten.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: TrainHistory,
}

/// One triplet per anchor: a uniformly drawn same-class partner and a uniformly drawn
/// graph of another class, both from `pool`. Anchors lacking either are skipped.
pub fn sample_triplets<T: Scalar>(
    dataset: &LabeledDataset<T>,
    anchors: &[usize],
    pool: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<TripletIndex> {
    let by_class = dataset.members_by_class(pool);
    let mut skipped = 0;
    let mut out = Vec::with_capacity(anchors.len());
    for &anchor in anchors {
        let class = dataset.label(anchor);
        let positives: Vec<usize> = by_class[class].iter().copied().filter(|&p| p != anchor).collect();
        let negatives: Vec<usize> = pool.iter().copied().filter(|&i| dataset.label(i) != class).collect();
        match (positives.choose(rng), negatives.choose(rng)) {
            (Some(&positive), Some(&negative)) => out.push(TripletIndex {
                anchor,
                positive,
                negative,
            }),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} anchors without a positive or negative partner");
    }
    out
}

fn as_triplet<T: Scalar>(ds: &LabeledDataset<T>, t: TripletIndex) -> Triplet<'_, T> {
    Triplet {
        anchor: ds.graph(t.anchor),
        positive: ds.graph(t.positive),
        negative: ds.graph(t.negative),
        labels: [ds.label(t.anchor), ds.label(t.positive), ds.label(t.negative)],
    }
}

/// Mean loss over `triplets`; terms are evaluated in parallel and summed in order.
fn mean_loss<T: Scalar>(
    ds: &LabeledDataset<T>,
    triplets: &[TripletIndex],
    params: &CostModelParams<T>,
    config: &TrainConfig,
) -> Result<f64> {
    let losses = triplets
        .par_iter()
        .map(|&t| triplet_loss(&as_triplet(ds, t), params, config).map(Scalar::as_f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

fn epoch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream 0 draws the fixed validation triplets; stream `e` draws epoch `e`'s triplets.
pub fn train_cost<T: Scalar>(dataset: &LabeledDataset<T>, config: &TrainConfig) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let train = dataset.train_indices()?;
    let val = dataset.val_indices()?;
    let train_classes = dataset.members_by_class(train).iter().filter(|m| !m.is_empty()).count();
    if train_classes < 2 {
        return Err(Error::InvalidDataset(format!(
            "training split has {train_classes} class(es); triplets need at least 2"
        )));
    }

    let mut params = CostModelParams::init(dataset.feature_dim(), config.hidden_dim, config.layers, config.seed);
    let mut adam = AdamState::new(params.len());

    let mut val_triplets = sample_triplets(dataset, val, val, &mut epoch_rng(config.seed, 0));
    if val_triplets.is_empty() {
        warn!("validation split yields no triplets; selecting on fixed training triplets instead");
        val_triplets = sample_triplets(dataset, train, train, &mut epoch_rng(config.seed, 0));
    }

    let baseline_triplets = sample_triplets(dataset, train, train, &mut epoch_rng(config.seed, 1));
    if baseline_triplets.is_empty() {
        return Err(Error::InvalidDataset("no anchor in the training split has a triplet".into()));
    }
    let baseline = EpochRecord {
        epoch: 0,
        learning_rate: 0.0,
        train_loss: mean_loss(dataset, &baseline_triplets, &params, config)?,
        val_loss: mean_loss(dataset, &val_triplets, &params, config)?,
    };
    let mut outcome = TrainOutcome {
        best_params: params.clone(),
        best_epoch: 0,
        best_val_loss: baseline.val_loss,
        history: TrainHistory {
            baseline: Some(baseline),
            epochs: Vec::with_capacity(config.epochs),
        },
    };

    for epoch in 1..=config.epochs {
        let lr = config.learning_rate_at(epoch - 1);
        let mut rng = epoch_rng(config.seed, epoch as u64 + 1);
        let mut triplets = sample_triplets(dataset, train, train, &mut rng);
        triplets.shuffle(&mut rng);
        let mut total = 0.0;
        for &t in &triplets {
            let (loss, g) = grad(&as_triplet(dataset, t), &params, config)?;
            total += loss.as_f64();
            adam_step(&mut params, &g, &mut adam, T::of(lr));
        }
        let record = EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: total / triplets.len().max(1) as f64,
            val_loss: mean_loss(dataset, &val_triplets, &params, config)?,
        };
        info!(
            "epoch {epoch}: lr {lr:.2e} train {:.4} val {:.4}",
            record.train_loss, record.val_loss
        );
        if record.val_loss < outcome.best_val_loss {
            outcome.best_val_loss = record.val_loss;
            outcome.best_epoch = epoch;
            outcome.best_params = params.clone();
        }
        outcome.history.epochs.push(record);
    }
    Ok(outcome)
}
