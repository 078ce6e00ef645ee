//! Deterministic data splits: stratified cross-validation folds, edge
//! corruption, and train/validation/test edge splits for link
//! prediction. Every split is a pure function of its inputs and a seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Assignment of items to `k` cross-validation folds.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fold id per item, in item order.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Item indices held out by `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Item indices available for training when `fold` is held out,
    /// ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Split items into `k` folds, keeping each class's members spread evenly:
/// every fold receives either `floor(m/k)` or `ceil(m/k)` members of a
/// class with `m` members, and overall fold sizes differ by at most one.
///
/// When some class has fewer than `k` members stratification cannot hold,
/// so the split falls back to plain shuffled folds and logs a warning.
/// `k` must be at least 2 and at most the number of items.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Invalid(format!("fold count {k} < 2")));
    }
    if k > labels.len() {
        return Err(Error::Invalid(format!(
            "fold count {k} exceeds item count {}",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (idx, &label) in labels.iter().enumerate() {
        per_class[label].push(idx);
    }
    per_class.retain(|members| !members.is_empty());

    if per_class.iter().any(|members| members.len() < k) {
        log::warn!(
            "a class has fewer than {k} members; falling back to plain shuffled folds"
        );
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        let mut assignments = vec![0usize; labels.len()];
        for (position, &item) in order.iter().enumerate() {
            assignments[item] = position % k;
        }
        return Ok(FoldSplit { k, assignments });
    }

    let mut assignments = vec![0usize; labels.len()];
    let mut sizes = vec![0usize; k];
    for members in &mut per_class {
        members.shuffle(&mut rng);
        let quota = members.len() / k;
        let remainder = members.len() % k;
        // the `remainder` extra members go to the currently smallest
        // folds, which keeps overall fold sizes within one of each other
        let mut fold_order: Vec<usize> = (0..k).collect();
        fold_order.sort_by_key(|&f| (sizes[f], f));
        let mut cursor = 0;
        for (rank, &fold) in fold_order.iter().enumerate() {
            let take = quota + usize::from(rank < remainder);
            for &item in &members[cursor..cursor + take] {
                assignments[item] = fold;
            }
            sizes[fold] += take;
            cursor += take;
        }
    }
    Ok(FoldSplit { k, assignments })
}

/// Keep a uniformly sampled `floor(keep_fraction * |E|)` subset of the
/// edges and drop the rest. Node count, features, and labels are
/// unchanged. `keep_fraction` must lie in (0, 1].
pub fn corrupt_edges(g: &Graph, keep_fraction: f64, seed: u64) -> Result<Graph> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Invalid(format!(
            "keep fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let keep = (keep_fraction * edges.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    edges.truncate(keep);
    g.with_edge_subset(edges)
}

/// Train/validation/test split of a graph's edges for link prediction,
/// with matched sets of sampled non-edges.
#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub train_edges: Vec<(usize, usize)>,
    pub val_edges: Vec<(usize, usize)>,
    pub test_edges: Vec<(usize, usize)>,
    pub val_negatives: Vec<(usize, usize)>,
    pub test_negatives: Vec<(usize, usize)>,
}

impl EdgeSplit {
    /// The graph restricted to training edges; encoders must only ever
    /// see this graph.
    pub fn train_graph(&self, g: &Graph) -> Result<Graph> {
        g.with_edge_subset(self.train_edges.iter().copied())
    }
}

/// Hold out `floor(val_fraction * |E|)` validation and
/// `floor(test_fraction * |E|)` test edges, and sample equally many
/// non-edges for each held-out set. The negatives are true non-edges of
/// the full graph and the two negative sets are disjoint.
pub fn split_edges_for_lp(
    g: &Graph,
    val_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<EdgeSplit> {
    if !(val_fraction > 0.0 && test_fraction > 0.0 && val_fraction + test_fraction < 1.0) {
        return Err(Error::Invalid(format!(
            "edge split fractions val={val_fraction} test={test_fraction} must be positive and sum below 1"
        )));
    }
    let num_edges = g.num_edges();
    let n_val = (val_fraction * num_edges as f64).floor() as usize;
    let n_test = (test_fraction * num_edges as f64).floor() as usize;
    if n_val == 0 || n_test == 0 {
        let needed = (1.0 / val_fraction.min(test_fraction)).ceil() as usize;
        return Err(Error::Invalid(format!(
            "graph has {num_edges} edges; at least {needed} are required for a {val_fraction}/{test_fraction} edge split"
        )));
    }
    let max_pairs = g.n() * (g.n() - 1) / 2;
    if max_pairs - num_edges < n_val + n_test {
        return Err(Error::Invalid(format!(
            "graph has only {} non-edges but {} negatives are required",
            max_pairs - num_edges,
            n_val + n_test
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.shuffle(&mut rng);
    let test_edges: Vec<(usize, usize)> = edges[..n_test].to_vec();
    let val_edges: Vec<(usize, usize)> = edges[n_test..n_test + n_val].to_vec();
    let mut train_edges: Vec<(usize, usize)> = edges[n_test + n_val..].to_vec();
    train_edges.sort_unstable();

    let mut chosen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut negatives = Vec::with_capacity(n_val + n_test);
    let mut attempts = 0usize;
    let attempt_cap = 1000 * (n_val + n_test).max(1);
    while negatives.len() < n_val + n_test {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::Invalid(
                "negative sampling failed; the graph is too dense".into(),
            ));
        }
        let a = rng.gen_range(0..g.n());
        let b = rng.gen_range(0..g.n());
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if g.has_edge(pair.0, pair.1) || chosen.contains(&pair) {
            continue;
        }
        chosen.insert(pair);
        negatives.push(pair);
    }
    let test_negatives = negatives[..n_test].to_vec();
    let val_negatives = negatives[n_test..].to_vec();

    Ok(EdgeSplit {
        train_edges,
        val_edges,
        test_edges,
        val_negatives,
        test_negatives,
    })
}
