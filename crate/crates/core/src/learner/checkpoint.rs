//! JSON checkpoints of trained cost parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::params::{CostModelParams, Linear};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    config: TrainConfig,
    params: BTreeMap<String, TensorDoc>,
    epoch: usize,
    val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T = f64> {
    pub config: TrainConfig,
    pub params: CostModelParams<T>,
    pub epoch: usize,
    pub val_loss: f64,
}

fn linear_docs<T: Scalar>(name: &str, l: &Linear<T>, out: &mut BTreeMap<String, TensorDoc>) {
    out.insert(
        format!("{name}.weight"),
        TensorDoc {
            shape: l.weight.shape().to_vec(),
            data: l.weight.iter().map(|x| x.as_f64()).collect(),
        },
    );
    out.insert(
        format!("{name}.bias"),
        TensorDoc {
            shape: vec![l.bias.len()],
            data: l.bias.iter().map(|x| x.as_f64()).collect(),
        },
    );
}

fn take_linear<T: Scalar>(name: &str, docs: &mut BTreeMap<String, TensorDoc>) -> Result<Option<Linear<T>>> {
    let (Some(w), Some(b)) = (docs.remove(&format!("{name}.weight")), docs.remove(&format!("{name}.bias")))
    else {
        return Ok(None);
    };
    let bad = |what: &str| Error::Schema {
        pointer: format!("/params/{name}.{what}"),
        message: "shape does not match data".into(),
    };
    let [rows, cols] = w.shape[..] else {
        return Err(bad("weight"));
    };
    let weight = Array2::from_shape_vec((rows, cols), w.data.into_iter().map(T::of).collect())
        .map_err(|_| bad("weight"))?;
    if b.shape != [rows] || b.data.len() != rows {
        return Err(bad("bias"));
    }
    let bias = Array1::from(b.data.into_iter().map(T::of).collect::<Vec<_>>());
    Ok(Some(Linear { weight, bias }))
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_json(&self) -> String {
        let mut params = BTreeMap::new();
        for (i, l) in self.params.gnn_layers.iter().enumerate() {
            linear_docs(&format!("gnn.{i}"), l, &mut params);
        }
        linear_docs("insdel.0", &self.params.insdel_hidden, &mut params);
        linear_docs("insdel.1", &self.params.insdel_out, &mut params);
        let doc = CheckpointDoc {
            config: self.config.clone(),
            params,
            epoch: self.epoch,
            val_loss: self.val_loss,
        };
        serde_json::to_string_pretty(&doc).expect("checkpoints always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: CheckpointDoc = serde_json::from_str(text)?;
        let mut gnn_layers = Vec::new();
        while let Some(l) = take_linear(&format!("gnn.{}", gnn_layers.len()), &mut doc.params)? {
            gnn_layers.push(l);
        }
        let missing = |name: &str| Error::Schema {
            pointer: format!("/params/{name}"),
            message: "missing tensor".into(),
        };
        let insdel_hidden = take_linear("insdel.0", &mut doc.params)?.ok_or_else(|| missing("insdel.0"))?;
        let insdel_out = take_linear("insdel.1", &mut doc.params)?.ok_or_else(|| missing("insdel.1"))?;
        if let Some(extra) = doc.params.keys().next() {
            return Err(Error::Schema {
                pointer: format!("/params/{extra}"),
                message: "unexpected tensor".into(),
            });
        }
        let params = CostModelParams {
            gnn_layers,
            insdel_hidden,
            insdel_out,
            epsilon_gin: T::zero(),
        };
        params.validate()?;
        Ok(Checkpoint {
            config: doc.config,
            params,
            epoch: doc.epoch,
            val_loss: doc.val_loss,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
