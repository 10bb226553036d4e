//! Distance-based classification and cost diagnostics.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::assignment::{frobenius_gap, hungarian, sinkhorn};
use crate::cost::{build_cost_matrix, CostModel};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ged::ged_hard;
use crate::lollipop::lollipop_shape;
use crate::scalar::Scalar;

fn as_map<S, V>(pairs: &[(String, V)], serializer: S) -> std::result::Result<S::Ok, S::Error>
where
    S: Serializer,
    V: Serialize,
{
    serializer.collect_map(pairs.iter().map(|(k, v)| (k, v)))
}

/// One row of a report: an item identifier plus named values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub item: String,
    #[serde(serialize_with = "as_map")]
    pub values: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub metric: String,
    pub records: Vec<Record>,
    pub aggregates: Vec<Summary>,
    #[serde(serialize_with = "as_map")]
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    pub fn aggregate(&self, name: &str) -> Option<&Summary> {
        self.aggregates.iter().find(|s| s.name == name)
    }
}

/// Mean and population standard deviation.
pub fn summarize(name: &str, values: &[f64]) -> Summary {
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count.max(1) as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count.max(1) as f64;
    Summary {
        name: name.to_owned(),
        mean,
        std: var.sqrt(),
        count,
    }
}

/// Assigns each test graph the class of its nearest reference graph under `ged_hard`;
/// ties go to the lower class index.
pub fn knn_classify<T: Scalar>(
    dataset: &LabeledDataset<T>,
    test: &[usize],
    reference: &[usize],
    model: &CostModel<T>,
) -> Result<(f64, EvalReport)> {
    let by_class = dataset.members_by_class(reference);
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::InvalidDataset(format!("reference set has no graph of class {c}")));
    }
    let predictions = test
        .par_iter()
        .map(|&t| {
            let mut best: Option<(f64, usize)> = None;
            for (class, members) in by_class.iter().enumerate() {
                for &r in members {
                    let d = ged_hard(dataset.graph(t), dataset.graph(r), model)?.0.as_f64();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, class));
                    }
                }
            }
            Ok(best.expect("reference classes are nonempty"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut correct = 0;
    let records = test
        .iter()
        .zip(&predictions)
        .map(|(&t, &(d, predicted))| {
            let hit = predicted == dataset.label(t);
            correct += usize::from(hit);
            Record {
                item: format!("graph {t}"),
                values: vec![
                    ("label".into(), dataset.label(t) as f64),
                    ("predicted".into(), predicted as f64),
                    ("distance".into(), d),
                    ("correct".into(), f64::from(u8::from(hit))),
                ],
            }
        })
        .collect();
    let accuracy = correct as f64 / test.len().max(1) as f64;
    let hits: Vec<f64> = predictions
        .iter()
        .zip(test)
        .map(|(&(_, p), &t)| f64::from(u8::from(p == dataset.label(t))))
        .collect();
    Ok((
        accuracy,
        EvalReport {
            metric: "knn_accuracy".into(),
            records,
            aggregates: vec![summarize("accuracy", &hits)],
            config: vec![
                ("test_size".into(), test.len().to_string()),
                ("reference_size".into(), reference.len().to_string()),
            ],
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Positive,
    Negative,
}

fn sample_pairs<T: Scalar>(
    dataset: &LabeledDataset<T>,
    pool: &[usize],
    kind: Option<PairKind>,
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    let by_class = dataset.members_by_class(pool);
    for _ in 0..count {
        let &a = pool.choose(&mut rng).ok_or_else(|| Error::InvalidDataset("empty pool".into()))?;
        let candidates: Vec<usize> = match kind {
            Some(PairKind::Positive) => by_class[dataset.label(a)].iter().copied().filter(|&b| b != a).collect(),
            Some(PairKind::Negative) => pool.iter().copied().filter(|&b| dataset.label(b) != dataset.label(a)).collect(),
            None => pool.iter().copied().filter(|&b| b != a).collect(),
        };
        let Some(&b) = candidates.choose(&mut rng) else {
            return Err(Error::InvalidDataset(format!("graph {a} has no partner of the requested kind")));
        };
        pairs.push((a, b));
    }
    Ok(pairs)
}

pub const HEAD_HEAD: &str = "head_to_head";
pub const HEAD_TAIL: &str = "head_to_tail";
pub const TAIL_TAIL: &str = "tail_to_tail";

/// Mean substitution cost grouped by head/tail membership of the two nodes, over
/// sampled same-class or different-class lollipop pairs. Aggregates come in raw and
/// max-normalised (`*_normalized`) form.
pub fn lollipop_cost_analysis<T: Scalar>(
    dataset: &LabeledDataset<T>,
    pool: &[usize],
    model: &CostModel<T>,
    kind: PairKind,
    sample_count: usize,
    seed: u64,
) -> Result<EvalReport> {
    let shapes = pool
        .iter()
        .map(|&i| {
            lollipop_shape(dataset.graph(i))
                .ok_or_else(|| Error::InvalidDataset(format!("graph {i} is not a lollipop graph")))
        })
        .collect::<Result<Vec<_>>>()?;
    let head_of = |i: usize| shapes[pool.iter().position(|&p| p == i).unwrap()].0;
    let pairs = sample_pairs(dataset, pool, Some(kind), sample_count, seed)?;

    let per_pair = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cost = build_cost_matrix(model, dataset.graph(a), dataset.graph(b))?;
            let (ma, mb) = (head_of(a), head_of(b));
            let mut sums = [(0.0, 0usize); 3];
            for ((u, v), c) in cost.substitution().indexed_iter() {
                let group = match (u < ma, v < mb) {
                    (true, true) => 0,
                    (false, false) => 2,
                    _ => 1,
                };
                sums[group].0 += c.as_f64();
                sums[group].1 += 1;
            }
            Ok(sums.map(|(s, k)| s / k.max(1) as f64))
        })
        .collect::<Result<Vec<_>>>()?;

    let names = [HEAD_HEAD, HEAD_TAIL, TAIL_TAIL];
    let records = pairs
        .iter()
        .zip(&per_pair)
        .map(|(&(a, b), means)| Record {
            item: format!("{a}-{b}"),
            values: names.iter().map(|n| n.to_string()).zip(means.iter().copied()).collect(),
        })
        .collect();
    let mut aggregates: Vec<Summary> = (0..3)
        .map(|g| summarize(names[g], &per_pair.iter().map(|m| m[g]).collect::<Vec<_>>()))
        .collect();
    let max = aggregates.iter().map(|s| s.mean).fold(0.0, f64::max);
    let normalized: Vec<Summary> = aggregates
        .iter()
        .map(|s| Summary {
            name: format!("{}_normalized", s.name),
            mean: if max > 0.0 { s.mean / max } else { 0.0 },
            std: if max > 0.0 { s.std / max } else { 0.0 },
            count: s.count,
        })
        .collect();
    aggregates.extend(normalized);
    Ok(EvalReport {
        metric: "lollipop_substitution_cost".into(),
        records,
        aggregates,
        config: vec![
            ("pair_kind".into(), format!("{kind:?}").to_lowercase()),
            ("sample_count".into(), sample_count.to_string()),
            ("seed".into(), seed.to_string()),
        ],
    })
}

/// Mean Frobenius distance between Sinkhorn(k) and Hungarian assignments per `k`.
pub fn sinkhorn_gap_curve<T: Scalar>(
    dataset: &LabeledDataset<T>,
    pool: &[usize],
    model: &CostModel<T>,
    ks: &[usize],
    delta: f64,
    sample_count: usize,
    seed: u64,
) -> Result<EvalReport> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ks must be nonempty and strictly ascending".into()));
    }
    let pairs = sample_pairs(dataset, pool, None, sample_count, seed)?;
    let gaps = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cost = build_cost_matrix(model, dataset.graph(a), dataset.graph(b))?;
            let hard = hungarian(&cost)?;
            ks.iter()
                .map(|&k| frobenius_gap(&sinkhorn(&cost, T::of(delta), k)?, &hard).map(Scalar::as_f64))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let records = pairs
        .iter()
        .zip(&gaps)
        .map(|(&(a, b), g)| Record {
            item: format!("{a}-{b}"),
            values: ks.iter().map(|k| format!("k={k}")).zip(g.iter().copied()).collect(),
        })
        .collect();
    let aggregates = ks
        .iter()
        .enumerate()
        .map(|(i, k)| summarize(&format!("k={k}"), &gaps.iter().map(|g| g[i]).collect::<Vec<_>>()))
        .collect();
    Ok(EvalReport {
        metric: "sinkhorn_frobenius_gap".into(),
        records,
        aggregates,
        config: vec![
            ("delta".into(), delta.to_string()),
            ("sample_count".into(), sample_count.to_string()),
            ("seed".into(), seed.to_string()),
        ],
    })
}
