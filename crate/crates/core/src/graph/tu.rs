//! Loader for the multi-file plain-text benchmark format used by MUTAG,
//! PROTEINS, PTC, NCI1 and the IMDB/COLLAB collections.
//!
//! A dataset directory holds `<name>_A.txt` (1-based global edge pairs),
//! `<name>_graph_indicator.txt` (per-node graph id) and
//! `<name>_graph_labels.txt`, plus optional `<name>_node_labels.txt` and
//! `<name>_node_attributes.txt`. All indices are converted to the 0-based
//! internal convention here and nowhere else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};

/// Load a TU-format dataset from `dir`, e.g. `load_tu_dataset("datasets/MUTAG", "MUTAG")`.
///
/// Node labels are one-hot encoded into node features; continuous
/// attributes, when present, are concatenated after the one-hot block.
/// Graph labels are remapped to a contiguous 0-based range by sorted
/// distinct value. Self-loop lines are dropped; duplicate and mirrored
/// edge lines merge into one undirected edge.
pub fn load_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let file = |suffix: &str| -> PathBuf { dir.join(format!("{name}_{suffix}.txt")) };

    let indicator_path = file("graph_indicator");
    let labels_path = file("graph_labels");
    let edges_path = file("A");
    for p in [&edges_path, &indicator_path, &labels_path] {
        if !p.exists() {
            return Err(Error::MissingFile(p.clone()));
        }
    }

    let indicator = read_int_lines(&indicator_path)?;
    let total_nodes = indicator.len();

    // Graph ids remapped to 0-based by sorted distinct value.
    let mut graph_ids: Vec<i64> = indicator.clone();
    graph_ids.sort_unstable();
    graph_ids.dedup();
    let graph_index: BTreeMap<i64, usize> =
        graph_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let num_graphs = graph_ids.len();

    // Node membership: global node -> (graph, local index).
    let mut node_graph = vec![0usize; total_nodes];
    let mut node_local = vec![0usize; total_nodes];
    let mut sizes = vec![0usize; num_graphs];
    for (node, &gid) in indicator.iter().enumerate() {
        let g = graph_index[&gid];
        node_graph[node] = g;
        node_local[node] = sizes[g];
        sizes[g] += 1;
    }

    // Edges, deduplicated and symmetrized per graph.
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let text = std::fs::read_to_string(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = parse_pair(line, &edges_path, lineno + 1)?;
        for idx in [a, b] {
            if idx < 1 || idx as usize > total_nodes {
                return Err(Error::parse(
                    &edges_path,
                    lineno + 1,
                    format!("node index {idx} outside 1..={total_nodes}"),
                ));
            }
        }
        let (a, b) = (a as usize - 1, b as usize - 1);
        if a == b {
            continue;
        }
        if node_graph[a] != node_graph[b] {
            return Err(Error::parse(
                &edges_path,
                lineno + 1,
                format!("edge ({}, {}) spans two graphs", a + 1, b + 1),
            ));
        }
        edges[node_graph[a]].push((node_local[a], node_local[b]));
    }

    // Graph labels remapped to contiguous 0-based classes.
    let raw_labels = read_int_lines(&labels_path)?;
    if raw_labels.len() != num_graphs {
        return Err(Error::Parse {
            path: labels_path.clone(),
            line: 0,
            message: format!(
                "{} graph labels for {} graphs",
                raw_labels.len(),
                num_graphs
            ),
        });
    }
    let mut classes: Vec<i64> = raw_labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let class_index: BTreeMap<i64, usize> =
        classes.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // Optional node labels -> one-hot block.
    let node_labels_path = file("node_labels");
    let node_labels = if node_labels_path.exists() {
        let values = read_int_lines(&node_labels_path)?;
        if values.len() != total_nodes {
            return Err(Error::Parse {
                path: node_labels_path.clone(),
                line: 0,
                message: format!("{} node labels for {total_nodes} nodes", values.len()),
            });
        }
        Some(values)
    } else {
        None
    };
    let label_index: BTreeMap<i64, usize> = node_labels
        .as_ref()
        .map(|values| {
            let mut distinct = values.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.iter().enumerate().map(|(i, &v)| (v, i)).collect()
        })
        .unwrap_or_default();
    let one_hot_dim = label_index.len();

    // Optional continuous attributes, concatenated after the one-hot block.
    let attrs_path = file("node_attributes");
    let attrs = if attrs_path.exists() {
        let rows = read_float_rows(&attrs_path)?;
        if rows.len() != total_nodes {
            return Err(Error::Parse {
                path: attrs_path.clone(),
                line: 0,
                message: format!("{} attribute rows for {total_nodes} nodes", rows.len()),
            });
        }
        Some(rows)
    } else {
        None
    };
    let attr_dim = attrs.as_ref().map_or(0, |rows| rows.first().map_or(0, Vec::len));
    if let Some(rows) = &attrs {
        if rows.iter().any(|r| r.len() != attr_dim) {
            return Err(Error::Parse {
                path: attrs_path.clone(),
                line: 0,
                message: "ragged attribute rows".into(),
            });
        }
    }

    let feature_dim = one_hot_dim + attr_dim;
    let mut features: Vec<Vec<Vec<f64>>> = sizes
        .iter()
        .map(|&sz| vec![vec![0.0; feature_dim]; sz])
        .collect();
    let mut local_labels: Vec<Vec<usize>> = sizes.iter().map(|&sz| vec![0; sz]).collect();
    for node in 0..total_nodes {
        let (g, l) = (node_graph[node], node_local[node]);
        if let Some(values) = &node_labels {
            let class = label_index[&values[node]];
            features[g][l][class] = 1.0;
            local_labels[g][l] = class;
        }
        if let Some(rows) = &attrs {
            features[g][l][one_hot_dim..].copy_from_slice(&rows[node]);
        }
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let mut graph = Graph::new(sizes[g], edges[g].iter().copied())?;
        if feature_dim > 0 {
            graph = graph.with_features(std::mem::take(&mut features[g]))?;
        }
        if node_labels.is_some() {
            graph = graph.with_node_labels(std::mem::take(&mut local_labels[g]))?;
        }
        graphs.push(graph.with_label(class_index[&raw_labels[g]]));
    }

    Dataset::new(name, graphs, classes.len())
}

fn read_int_lines(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<i64>().map_err(|_| {
            Error::parse(path, lineno + 1, format!("expected an integer, got {line:?}"))
        })?);
    }
    Ok(values)
}

fn read_float_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("expected a real number, got {tok:?}"))
                })
            })
            .collect();
        rows.push(row?);
    }
    Ok(rows)
}

fn parse_pair(line: &str, path: &Path, lineno: usize) -> Result<(i64, i64)> {
    let cleaned = line.replace(',', " ");
    let mut parts = cleaned.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => {
            let a = a.parse::<i64>().map_err(|_| {
                Error::parse(path, lineno, format!("invalid node index {a:?}"))
            })?;
            let b = b.parse::<i64>().map_err(|_| {
                Error::parse(path, lineno, format!("invalid node index {b:?}"))
            })?;
            Ok((a, b))
        }
        _ => Err(Error::parse(
            path,
            lineno,
            format!("expected an `i, j` pair, got {line:?}"),
        )),
    }
}
