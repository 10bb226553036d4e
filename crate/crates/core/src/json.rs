//! Canonical JSON dataset format.
//!
//! ```text
//! {"name": str, "class_count": int, "feature_dim": int,
//!  "graphs": [{"nodes": [[f, ...], ...], "edges": [{"u": int, "v": int, "attr": [f, ...] | null}, ...]}],
//!  "labels": [int, ...],
//!  "split": {"train": [...], "val": [...], "test": [...]} | null,
//!  "metadata": {"raw_labels": [int, ...]}}        (optional)
//! ```
//!
//! Augmented datasets replace `"labels"` with `"soft_labels"`, one probability vector
//! per graph. Reading validates the document and reports violations with a JSON
//! pointer to the offending value.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::augment::{AugmentedSample, MixedLabel};
use crate::dataset::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

#[derive(Serialize)]
struct EdgeDoc {
    u: usize,
    v: usize,
    attr: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct GraphDoc {
    nodes: Vec<Vec<f64>>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize)]
struct SplitDoc<'a> {
    train: &'a [usize],
    val: &'a [usize],
    test: &'a [usize],
}

#[derive(Serialize)]
struct MetadataDoc<'a> {
    raw_labels: &'a [i64],
}

#[derive(Serialize)]
struct DatasetDoc<'a> {
    name: &'a str,
    class_count: usize,
    feature_dim: usize,
    graphs: Vec<GraphDoc>,
    labels: &'a [usize],
    split: Option<SplitDoc<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<MetadataDoc<'a>>,
}

#[derive(Serialize)]
struct AugmentedDoc<'a> {
    name: &'a str,
    class_count: usize,
    feature_dim: usize,
    graphs: Vec<GraphDoc>,
    soft_labels: Vec<Vec<f64>>,
    split: Option<()>,
}

pub fn graph_to_value<T: Scalar>(g: &Graph<T>) -> Value {
    serde_json::to_value(graph_doc(g)).expect("graph documents always serialize")
}

fn graph_doc<T: Scalar>(g: &Graph<T>) -> GraphDoc {
    GraphDoc {
        nodes: g
            .features()
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.as_f64()).collect())
            .collect(),
        edges: g
            .edges()
            .map(|(u, v, a)| EdgeDoc {
                u,
                v,
                attr: a.map(|a| a.iter().map(|x| x.as_f64()).collect()),
            })
            .collect(),
    }
}

pub fn dataset_to_string<T: Scalar>(ds: &LabeledDataset<T>) -> String {
    let doc = DatasetDoc {
        name: ds.name(),
        class_count: ds.class_count(),
        feature_dim: ds.feature_dim(),
        graphs: ds.graphs().iter().map(graph_doc).collect(),
        labels: ds.labels(),
        split: ds.split().map(|s| SplitDoc {
            train: &s.train,
            val: &s.val,
            test: &s.test,
        }),
        metadata: ds.raw_labels().map(|raw_labels| MetadataDoc { raw_labels }),
    };
    serde_json::to_string(&doc).expect("dataset documents always serialize")
}

pub fn write_dataset_json<T: Scalar>(ds: &LabeledDataset<T>, path: &Path) -> Result<()> {
    fs::write(path, dataset_to_string(ds))?;
    Ok(())
}

pub fn read_dataset_json<T: Scalar>(path: &Path) -> Result<LabeledDataset<T>> {
    let text = fs::read_to_string(path)?;
    dataset_from_str(&text)
}

pub fn dataset_from_str<T: Scalar>(text: &str) -> Result<LabeledDataset<T>> {
    let root: Value = serde_json::from_str(text)?;
    let name = str_at(&root, "/name")?;
    let class_count = usize_at(&root, "/class_count")?;
    let feature_dim = usize_at(&root, "/feature_dim")?;
    let graphs = graphs_at(&root, feature_dim)?;

    let labels_value = array_at(&root, "/labels")?;
    if labels_value.len() != graphs.len() {
        return Err(schema(
            "/labels",
            format!("{} labels for {} graphs", labels_value.len(), graphs.len()),
        ));
    }
    let labels = labels_value
        .iter()
        .enumerate()
        .map(|(i, v)| label_value(v, class_count, &format!("/labels/{i}")))
        .collect::<Result<Vec<_>>>()?;

    let mut ds = LabeledDataset::new(name, graphs, labels, class_count, feature_dim)
        .map_err(|e| schema("", e.to_string()))?;

    match root.get("split") {
        None | Some(Value::Null) => {}
        Some(_) => {
            let list = |part: &str| -> Result<Vec<usize>> {
                let p = format!("/split/{part}");
                array_at(&root, &p)?
                    .iter()
                    .enumerate()
                    .map(|(i, v)| as_usize(v, &format!("{p}/{i}")))
                    .collect()
            };
            let split = Split {
                train: list("train")?,
                val: list("val")?,
                test: list("test")?,
            };
            ds = ds.with_split(split).map_err(|e| schema("/split", e.to_string()))?;
        }
    }
    if let Some(raw) = root.pointer("/metadata/raw_labels") {
        let raw = raw
            .as_array()
            .ok_or_else(|| schema("/metadata/raw_labels", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_i64()
                    .ok_or_else(|| schema(format!("/metadata/raw_labels/{i}"), "expected an integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        ds = ds
            .with_raw_labels(raw)
            .map_err(|e| schema("/metadata/raw_labels", e.to_string()))?;
    }
    Ok(ds)
}

/// Writes interpolated samples with their soft labels.
pub fn augmented_to_string<T: Scalar>(
    name: &str,
    class_count: usize,
    feature_dim: usize,
    samples: &[AugmentedSample<T>],
) -> String {
    let doc = AugmentedDoc {
        name,
        class_count,
        feature_dim,
        graphs: samples.iter().map(|s| graph_doc(&s.graph)).collect(),
        soft_labels: samples
            .iter()
            .map(|s| s.label.weights().iter().map(|x| x.as_f64()).collect())
            .collect(),
        split: None,
    };
    serde_json::to_string(&doc).expect("augmented documents always serialize")
}

pub fn read_augmented_json<T: Scalar>(text: &str) -> Result<Vec<(Graph<T>, MixedLabel<T>)>> {
    let root: Value = serde_json::from_str(text)?;
    let class_count = usize_at(&root, "/class_count")?;
    let feature_dim = usize_at(&root, "/feature_dim")?;
    let graphs = graphs_at(&root, feature_dim)?;
    let soft = array_at(&root, "/soft_labels")?;
    if soft.len() != graphs.len() {
        return Err(schema("/soft_labels", "one soft label per graph required"));
    }
    graphs
        .into_iter()
        .zip(soft)
        .enumerate()
        .map(|(i, (g, v))| {
            let p = format!("/soft_labels/{i}");
            let w = floats(v, &p)?;
            if w.len() != class_count {
                return Err(schema(&p, format!("expected {class_count} weights")));
            }
            let label = MixedLabel::from_weights(w).map_err(|e| schema(&p, e.to_string()))?;
            Ok((g, label))
        })
        .collect()
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn at<'a>(root: &'a Value, p: &str) -> Result<&'a Value> {
    root.pointer(p).ok_or_else(|| schema(p, "missing"))
}

fn str_at(root: &Value, p: &str) -> Result<String> {
    at(root, p)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| schema(p, "expected a string"))
}

fn as_usize(v: &Value, p: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(p, "expected a non-negative integer"))
}

fn usize_at(root: &Value, p: &str) -> Result<usize> {
    as_usize(at(root, p)?, p)
}

fn array_at<'a>(root: &'a Value, p: &str) -> Result<&'a Vec<Value>> {
    at(root, p)?.as_array().ok_or_else(|| schema(p, "expected an array"))
}

fn floats<T: Scalar>(v: &Value, p: &str) -> Result<Vec<T>> {
    v.as_array()
        .ok_or_else(|| schema(p, "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .map(T::of)
                .ok_or_else(|| schema(format!("{p}/{i}"), "expected a number"))
        })
        .collect()
}

/// Accepts an integer class index or a one-hot vector.
fn label_value(v: &Value, class_count: usize, p: &str) -> Result<usize> {
    if let Some(c) = v.as_u64() {
        let c = c as usize;
        if c >= class_count {
            return Err(schema(p, format!("class {c} outside 0..{class_count}")));
        }
        return Ok(c);
    }
    let w: Vec<f64> = floats(v, p)?;
    if w.len() != class_count {
        return Err(schema(p, format!("one-hot label must have {class_count} entries")));
    }
    let ones: Vec<usize> = (0..w.len()).filter(|&i| w[i] == 1.0).collect();
    if ones.len() != 1 || w.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(schema(p, "label vector is not one-hot"));
    }
    Ok(ones[0])
}

fn graphs_at<T: Scalar>(root: &Value, feature_dim: usize) -> Result<Vec<Graph<T>>> {
    array_at(root, "/graphs")?
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let base = format!("/graphs/{gi}");
            let nodes = array_at(g, "/nodes").map_err(|_| schema(format!("{base}/nodes"), "expected an array"))?;
            let rows = nodes
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let p = format!("{base}/nodes/{i}");
                    let row: Vec<T> = floats(r, &p)?;
                    if row.len() != feature_dim {
                        return Err(schema(p, format!("expected {feature_dim} features")));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let edges = array_at(g, "/edges").map_err(|_| schema(format!("{base}/edges"), "expected an array"))?;
            let edges = edges
                .iter()
                .enumerate()
                .map(|(ei, e)| {
                    let p = format!("{base}/edges/{ei}");
                    let u = as_usize(e.get("u").unwrap_or(&Value::Null), &format!("{p}/u"))?;
                    let v = as_usize(e.get("v").unwrap_or(&Value::Null), &format!("{p}/v"))?;
                    if u >= v {
                        return Err(schema(&p, "edge endpoints must satisfy u < v"));
                    }
                    let attr = match e.get("attr") {
                        None | Some(Value::Null) => None,
                        Some(a) => Some(floats(a, &format!("{p}/attr"))?),
                    };
                    Ok((u, v, attr))
                })
                .collect::<Result<Vec<_>>>()?;
            Graph::from_rows(feature_dim, rows, edges).map_err(|e| schema(base, e.to_string()))
        })
        .collect()
}
