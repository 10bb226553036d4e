//! Labelled graph datasets, stratified splitting and label corruption.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

/// Train/validation/test partition by graph index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    fn validate(&self, len: usize) -> Result<()> {
        let mut seen = vec![false; len];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= len {
                return Err(Error::InvalidDataset(format!(
                    "split index {i} out of range for {len} graphs"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidDataset(format!(
                    "graph {i} appears in more than one split"
                )));
            }
        }
        Ok(())
    }
}

/// Graphs with single-class labels, stored as class indices in `0..class_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset<T = f64> {
    name: String,
    graphs: Vec<Graph<T>>,
    labels: Vec<usize>,
    class_count: usize,
    feature_dim: usize,
    split: Option<Split>,
    raw_labels: Option<Vec<i64>>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<Graph<T>>,
        labels: Vec<usize>,
        class_count: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        if class_count == 0 {
            return Err(Error::InvalidDataset("class_count must be positive".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(Error::InvalidDataset(format!(
                "label {l} of graph {i} exceeds class_count {class_count}"
            )));
        }
        for (i, g) in graphs.iter().enumerate() {
            g.validate()?;
            if g.feature_dim() != feature_dim {
                return Err(Error::InvalidDataset(format!(
                    "graph {i} has feature dimension {}, expected {feature_dim}",
                    g.feature_dim()
                )));
            }
        }
        Ok(LabeledDataset {
            name: name.into(),
            graphs,
            labels,
            class_count,
            feature_dim,
            split: None,
            raw_labels: None,
        })
    }

    pub fn with_split(mut self, split: Split) -> Result<Self> {
        split.validate(self.graphs.len())?;
        self.split = Some(split);
        Ok(self)
    }

    /// Records the raw label value of each class index.
    pub fn with_raw_labels(mut self, raw: Vec<i64>) -> Result<Self> {
        if raw.len() != self.class_count {
            return Err(Error::InvalidDataset(format!(
                "{} raw labels for {} classes",
                raw.len(),
                self.class_count
            )));
        }
        self.raw_labels = Some(raw);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph<T>] {
        &self.graphs
    }

    pub fn graph(&self, i: usize) -> &Graph<T> {
        &self.graphs[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn one_hot(&self, i: usize) -> Vec<T> {
        one_hot(self.labels[i], self.class_count)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    pub fn raw_labels(&self) -> Option<&[i64]> {
        self.raw_labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    fn require_split(&self) -> Result<&Split> {
        self.split
            .as_ref()
            .ok_or_else(|| Error::InvalidDataset(format!("dataset {} has no split", self.name)))
    }

    pub fn train_indices(&self) -> Result<&[usize]> {
        Ok(&self.require_split()?.train)
    }

    pub fn val_indices(&self) -> Result<&[usize]> {
        Ok(&self.require_split()?.val)
    }

    pub fn test_indices(&self) -> Result<&[usize]> {
        Ok(&self.require_split()?.test)
    }

    /// Indices of `subset` grouped by class.
    pub fn members_by_class(&self, subset: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count];
        for &i in subset {
            out[self.labels[i]].push(i);
        }
        out
    }

    /// Per-class shuffled split with largest-remainder rounding of `ratios`.
    pub fn stratified_split(&self, ratios: [f64; 3], seed: u64) -> Result<Self> {
        if ratios.iter().any(|r| !(0.0..=1.0).contains(r))
            || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "split ratios {ratios:?} must be in [0,1] and sum to 1"
            )));
        }
        let all: Vec<usize> = (0..self.len()).collect();
        let by_class = self.members_by_class(&all);
        if let Some((c, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < 3) {
            return Err(Error::InvalidDataset(format!(
                "class {c} has {} members; stratified split needs at least 3",
                members.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut split = Split::default();
        for mut members in by_class {
            members.shuffle(&mut rng);
            let [train, val, _] = largest_remainder(members.len(), ratios);
            split.train.extend_from_slice(&members[..train]);
            split.val.extend_from_slice(&members[train..train + val]);
            split.test.extend_from_slice(&members[train + val..]);
        }
        split.train.sort_unstable();
        split.val.sort_unstable();
        split.test.sort_unstable();
        self.clone().with_split(split)
    }

    /// Reassigns `⌊proportion·|train|⌋` training labels to a different, uniformly drawn class.
    pub fn corrupt_labels(&self, proportion: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&proportion) {
            return Err(Error::InvalidArgument(format!(
                "corruption proportion {proportion} outside [0, 1]"
            )));
        }
        if self.class_count < 2 {
            return Err(Error::InvalidDataset("label corruption needs at least 2 classes".into()));
        }
        let train = self.train_indices()?;
        let count = (proportion * train.len() as f64).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for pos in index::sample(&mut rng, train.len(), count) {
            let i = train[pos];
            let shift = rng.random_range(1..self.class_count);
            out.labels[i] = (self.labels[i] + shift) % self.class_count;
        }
        Ok(out)
    }
}

pub fn one_hot<T: Scalar>(class: usize, class_count: usize) -> Vec<T> {
    let mut v = vec![T::zero(); class_count];
    v[class] = T::one();
    v
}

/// Integer parts of `count·ratios` summing to `count`, each within 1 of exact.
fn largest_remainder(count: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact = ratios.map(|r| r * count as f64);
    let mut parts = exact.map(|x| x.floor() as usize);
    let mut left = count - parts.iter().sum::<usize>();
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        parts[k] += 1;
        left -= 1;
    }
    parts
}
