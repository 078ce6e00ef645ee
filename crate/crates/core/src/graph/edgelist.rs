//! Generic edge-list text format.
//!
//! One `i j` whitespace-separated 0-based pair per line, with an optional
//! leading header `n=<count>`. Self-loop lines are dropped and duplicate
//! pairs merged.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Load a graph from an edge-list file.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut declared_n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_index: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            declared_n = Some(rest.trim().parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("invalid node count {rest:?}"))
            })?);
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected two indices, got {line:?}"),
                ))
            }
        };
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| {
                Error::parse(path, lineno + 1, format!("invalid node index {s:?}"))
            })
        };
        let (a, b) = (parse_idx(a)?, parse_idx(b)?);
        max_index = Some(max_index.map_or(a.max(b), |m| m.max(a).max(b)));
        if a == b {
            continue; // self-loop lines are dropped
        }
        edges.push((a, b));
    }

    let n = match (declared_n, max_index) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::Parse {
                path: path.into(),
                line: 0,
                message: "cannot infer node count from an empty edge list".into(),
            })
        }
    };
    Graph::new(n, edges)
}

/// Write a graph in the edge-list format, always including the `n=` header
/// so reloading round-trips node count and edge set exactly.
pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("n={}\n", g.n()));
    for (i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
