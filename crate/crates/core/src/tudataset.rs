//! Reader for the TUDataset plain-text graph classification format.
//!
//! A dataset `DS` lives in one directory as `DS_A.txt` (1-based `i, j` node pairs),
//! `DS_graph_indicator.txt` (graph id per node), `DS_graph_labels.txt` and the
//! optional `DS_node_labels.txt`, `DS_edge_labels.txt`, `DS_node_attributes.txt`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use ndarray::Array2;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{edge_key, Graph, DEGREE_BUCKETS, DEGREE_CAP};
use crate::scalar::Scalar;

type EdgeMap<T> = BTreeMap<(usize, usize), Option<Vec<T>>>;

struct Lines {
    path: PathBuf,
    lines: Vec<(usize, String)>,
}

impl Lines {
    fn read(dir: &Path, name: &str, suffix: &str, required: bool) -> Result<Option<Self>> {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        if !path.exists() {
            return if required {
                Err(Error::MissingFile(path))
            } else {
                Ok(None)
            };
        }
        let text = fs::read_to_string(&path)?;
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim().to_owned()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Ok(Some(Lines { path, lines }))
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn fields<F: std::str::FromStr>(&self, line: usize, text: &str) -> Result<Vec<F>> {
        text.split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| self.err(line, format!("cannot parse {:?}", f.trim())))
            })
            .collect()
    }

    fn integers(&self) -> Result<Vec<(usize, i64)>> {
        self.lines
            .iter()
            .map(|(n, l)| {
                let v: Vec<i64> = self.fields(*n, l)?;
                match v.as_slice() {
                    [x] => Ok((*n, *x)),
                    _ => Err(self.err(*n, "expected one integer")),
                }
            })
            .collect()
    }
}

/// Maps raw values to contiguous indices in ascending order of value.
fn contiguous(values: impl Iterator<Item = i64>) -> BTreeMap<i64, usize> {
    let set: BTreeSet<i64> = values.collect();
    set.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
}

pub fn parse_tudataset<T: Scalar>(dir: &Path, name: &str) -> Result<LabeledDataset<T>> {
    let adjacency = Lines::read(dir, name, "A", true)?.unwrap();
    let indicator = Lines::read(dir, name, "graph_indicator", true)?.unwrap();
    let graph_labels = Lines::read(dir, name, "graph_labels", true)?.unwrap();
    let node_labels = Lines::read(dir, name, "node_labels", false)?;
    let edge_labels = Lines::read(dir, name, "edge_labels", false)?;
    let node_attrs = Lines::read(dir, name, "node_attributes", false)?;

    let raw_graph_labels = graph_labels.integers()?;
    let graph_count = raw_graph_labels.len();

    // node -> (graph, local index)
    let mut owner = Vec::new();
    let mut sizes = vec![0usize; graph_count];
    for (line, gid) in indicator.integers()? {
        if gid < 1 || gid as usize > graph_count {
            return Err(indicator.err(
                line,
                format!("graph id {gid} outside 1..={graph_count}"),
            ));
        }
        let g = gid as usize - 1;
        owner.push((g, sizes[g]));
        sizes[g] += 1;
    }
    let node_count = owner.len();

    let node_features: Vec<Vec<T>> = if let Some(attrs) = &node_attrs {
        if attrs.lines.len() != node_count {
            return Err(attrs.err(
                attrs.lines.len(),
                format!("{} attribute lines for {node_count} nodes", attrs.lines.len()),
            ));
        }
        let mut dim = None;
        let mut rows = Vec::with_capacity(node_count);
        for (line, text) in &attrs.lines {
            let row: Vec<f64> = attrs.fields(*line, text)?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(attrs.err(
                        *line,
                        format!("attribute dimension {} differs from {d}", row.len()),
                    ))
                }
                _ => {}
            }
            rows.push(row.into_iter().map(T::of).collect());
        }
        rows
    } else if let Some(labels) = &node_labels {
        let values = labels.integers()?;
        if values.len() != node_count {
            return Err(labels.err(
                values.last().map_or(0, |v| v.0),
                format!("{} node labels for {node_count} nodes", values.len()),
            ));
        }
        let index = contiguous(values.iter().map(|v| v.1));
        values
            .iter()
            .map(|(_, v)| crate::dataset::one_hot(index[v], index.len()))
            .collect()
    } else {
        Vec::new()
    };

    let edge_values = match &edge_labels {
        Some(l) => {
            let v = l.integers()?;
            if v.len() != adjacency.lines.len() {
                return Err(l.err(
                    v.last().map_or(0, |x| x.0),
                    format!("{} edge labels for {} edges", v.len(), adjacency.lines.len()),
                ));
            }
            Some(v)
        }
        None => None,
    };
    let edge_index = edge_values
        .as_ref()
        .map(|v| contiguous(v.iter().map(|x| x.1)));

    let mut directed = BTreeSet::new();
    let mut edges: Vec<EdgeMap<T>> = vec![BTreeMap::new(); graph_count];
    for (k, (line, text)) in adjacency.lines.iter().enumerate() {
        let ids: Vec<usize> = adjacency.fields(*line, text)?;
        let [i, j] = ids[..] else {
            return Err(adjacency.err(*line, "expected `i, j`"));
        };
        for id in [i, j] {
            if id < 1 || id > node_count {
                return Err(adjacency.err(*line, format!("node id {id} outside 1..={node_count}")));
            }
        }
        let (gi, li) = owner[i - 1];
        let (gj, lj) = owner[j - 1];
        if gi != gj {
            return Err(adjacency.err(*line, "edge crosses graph boundary"));
        }
        if li == lj {
            warn!("{}:{line}: dropping self-loop on node {i}", adjacency.path.display());
            continue;
        }
        directed.insert((i, j));
        let attr = match (&edge_values, &edge_index) {
            (Some(v), Some(ix)) => Some(crate::dataset::one_hot(ix[&v[k].1], ix.len())),
            _ => None,
        };
        edges[gi].entry(edge_key(li, lj)).or_insert(attr);
    }
    if directed.iter().any(|&(i, j)| !directed.contains(&(j, i))) {
        warn!(
            "{}: some edges are listed in one direction only; treating them as undirected",
            adjacency.path.display()
        );
    }

    let mut per_graph_rows: Vec<Vec<Vec<T>>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (node, &(g, _)) in owner.iter().enumerate() {
        if let Some(row) = node_features.get(node) {
            per_graph_rows[g].push(row.clone());
        }
    }

    let feature_dim = node_features.first().map_or(DEGREE_BUCKETS, Vec::len);
    let mut graphs = Vec::with_capacity(graph_count);
    for (g, edge_map) in edges.into_iter().enumerate() {
        let n = sizes[g];
        let edge_list = edge_map.into_iter().map(|((u, v), a)| (u, v, a));
        let graph = if node_features.is_empty() {
            let mut features = Array2::zeros((n, DEGREE_BUCKETS));
            let graph = Graph::new(features.clone(), edge_list)?;
            for (v, d) in graph.degrees().into_iter().enumerate() {
                features[[v, d.min(DEGREE_CAP)]] = T::one();
            }
            Graph::new(features, graph.edges().map(|(u, v, a)| (u, v, a.map(<[T]>::to_vec))))?
        } else {
            Graph::from_rows(feature_dim, std::mem::take(&mut per_graph_rows[g]), edge_list)?
        };
        graphs.push(graph);
    }

    let class_of = contiguous(raw_graph_labels.iter().map(|v| v.1));
    let labels = raw_graph_labels.iter().map(|(_, v)| class_of[v]).collect();
    let raw: Vec<i64> = class_of.keys().copied().collect();
    LabeledDataset::new(name, graphs, labels, class_of.len(), feature_dim)?.with_raw_labels(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
    }

    #[test]
    fn smallest_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "T", "A", "1, 2\n2, 1\n2, 3\n3, 2\n");
        write(p, "T", "graph_indicator", "1\n1\n1\n");
        write(p, "T", "graph_labels", "1\n");
        write(p, "T", "node_labels", "0\n0\n0\n");
        let ds = parse_tudataset::<f64>(p, "T").unwrap();
        assert_eq!(ds.len(), 1);
        let g = ds.graph(0);
        assert_eq!((g.node_count(), g.feature_dim()), (3, 1));
        let edges: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
        assert_eq!(ds.class_count(), 1);
        assert_eq!(ds.one_hot(0), vec![1.0]);
        assert_eq!(ds.raw_labels(), Some(&[1][..]));
    }

    #[test]
    fn edge_across_graphs_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "X", "A", "1, 2\n4, 2\n");
        write(p, "X", "graph_indicator", "1\n1\n2\n2\n");
        write(p, "X", "graph_labels", "0\n1\n");
        let err = parse_tudataset::<f64>(p, "X").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edge crosses graph boundary"), "{msg}");
        assert!(msg.contains("X_A.txt:2"), "{msg}");
    }

    #[test]
    fn node_labels_become_one_hots() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "N", "A", "1, 2\n2, 1\n2, 3\n3, 2\n4, 5\n5, 4\n");
        write(p, "N", "graph_indicator", "1\n1\n1\n1\n1\n");
        write(p, "N", "graph_labels", "-1\n");
        write(p, "N", "node_labels", "0\n1\n0\n2\n1\n");
        let ds = parse_tudataset::<f64>(p, "N").unwrap();
        assert_eq!(ds.feature_dim(), 3);
        assert_eq!(ds.graph(0).feature(3).to_vec(), vec![0.0, 0.0, 1.0]);
        // symmetric-complete listing: half the lines
        assert_eq!(ds.graph(0).edge_count(), 3);
    }

    #[test]
    fn missing_mandatory_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "M", "graph_indicator", "1\n");
        write(dir.path(), "M", "graph_labels", "1\n");
        let msg = parse_tudataset::<f64>(dir.path(), "M").unwrap_err().to_string();
        assert!(msg.contains("M_A.txt"), "{msg}");
    }

    #[test]
    fn bad_node_id_and_ragged_attributes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "B", "A", "1, 9\n");
        write(p, "B", "graph_indicator", "1\n1\n");
        write(p, "B", "graph_labels", "0\n");
        assert!(parse_tudataset::<f64>(p, "B").unwrap_err().to_string().contains("B_A.txt:1"));

        write(p, "B", "A", "1, 2\n2, 1\n");
        write(p, "B", "node_attributes", "0.5, 1.0\n0.25\n");
        let msg = parse_tudataset::<f64>(p, "B").unwrap_err().to_string();
        assert!(msg.contains("B_node_attributes.txt:2"), "{msg}");
    }

    #[test]
    fn featureless_graphs_use_degree_buckets_and_edge_labels_attach() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "I", "A", "1, 2\n2, 1\n1, 3\n3, 1\n");
        write(p, "I", "graph_indicator", "1\n1\n1\n");
        write(p, "I", "graph_labels", "3\n");
        write(p, "I", "edge_labels", "5\n5\n7\n7\n");
        let ds = parse_tudataset::<f64>(p, "I").unwrap();
        let g = ds.graph(0);
        assert_eq!(g.feature_dim(), DEGREE_BUCKETS);
        assert_eq!(g.feature(0)[2], 1.0);
        assert_eq!(g.edge_attr(0, 2), Some(Some(&[0.0, 1.0][..])));
    }
}
