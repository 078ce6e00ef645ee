//! Experiment drivers: cross-validated graph classification, repeated
//! link prediction, and node classification on corrupted graphs.
//!
//! Every driver is deterministic for a given seed. Fold-level work runs
//! in parallel unless `single_thread` is set, and each fold derives its
//! own seed (`seed + fold`), so the two execution modes produce
//! identical numbers.

pub mod metrics;
pub mod report;
pub mod splits;

pub use metrics::{accuracy, average_precision, roc_auc};
pub use report::{config_fingerprint, RunReport};
pub use splits::{
    corrupt_edges, split_edges_for_lp, stratified_kfold, EdgeSplit, FoldSplit,
};

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};
use crate::nn::{
    build_operator_with, AutoencoderConfig, ClassifierConfig, GinAggregator, GraphAutoencoder,
    GraphClassifier, LayerKind, NodeClassifier, Readout,
};
use crate::tensor::{Adam, AdamConfig, CsrMatrix, ParamSet, Tape, Tensor};
use crate::transforms::{build_transform_with, DegreeSource, Transform};

/// Which epoch's test metric a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Test metric at the epoch with the best validation metric, with
    /// early stopping once validation stops improving.
    #[default]
    BestValidation,
    /// Test metric after the final epoch, no early stopping.
    FinalEpoch,
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best-val" => Ok(SelectionRule::BestValidation),
            "final-epoch" => Ok(SelectionRule::FinalEpoch),
            other => Err(Error::Config(format!(
                "unknown selection rule {other:?}, valid values: best-val, final-epoch"
            ))),
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionRule::BestValidation => "best-val",
            SelectionRule::FinalEpoch => "final-epoch",
        })
    }
}

/// Optimization schedule shared by all tasks.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub selection: SelectionRule,
    /// Run folds sequentially instead of in parallel.
    pub single_thread: bool,
}

impl TrainSettings {
    pub fn graph_classification() -> Self {
        TrainSettings {
            epochs: 350,
            learning_rate: 0.003,
            weight_decay: 0.0,
            dropout: 0.0,
            patience: 50,
            selection: SelectionRule::BestValidation,
            single_thread: false,
        }
    }

    pub fn link_prediction() -> Self {
        TrainSettings {
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 0.0,
            dropout: 0.0,
            patience: 50,
            selection: SelectionRule::BestValidation,
            single_thread: false,
        }
    }

    pub fn node_classification() -> Self {
        TrainSettings {
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            patience: 50,
            selection: SelectionRule::BestValidation,
            single_thread: false,
        }
    }

    fn optimizer(&self) -> Adam {
        Adam::new(AdamConfig {
            lr: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        })
    }
}

/// Tracks the per-epoch validation and test metrics and applies the
/// selection rule. `record` returns true when training should stop.
struct EpochTracker<'a> {
    settings: &'a TrainSettings,
    best_val: f64,
    best_epoch: usize,
    chosen: Vec<f64>,
    last: Vec<f64>,
    seen: bool,
}

impl<'a> EpochTracker<'a> {
    fn new(settings: &'a TrainSettings) -> Self {
        EpochTracker {
            settings,
            best_val: f64::NEG_INFINITY,
            best_epoch: 0,
            chosen: Vec::new(),
            last: Vec::new(),
            seen: false,
        }
    }

    fn record(&mut self, epoch: usize, val: f64, test: Vec<f64>) -> bool {
        self.last = test.clone();
        if !self.seen || val > self.best_val {
            self.seen = true;
            self.best_val = val;
            self.best_epoch = epoch;
            self.chosen = test;
        }
        self.settings.selection == SelectionRule::BestValidation
            && epoch - self.best_epoch >= self.settings.patience
    }

    fn into_result(self) -> Vec<f64> {
        match self.settings.selection {
            SelectionRule::BestValidation => self.chosen,
            SelectionRule::FinalEpoch => self.last,
        }
    }
}

/// Run `work(fold)` for every fold and join the rows in fold order.
fn map_folds<F>(k: usize, single_thread: bool, work: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
{
    if single_thread {
        (0..k).map(work).collect()
    } else {
        (0..k).into_par_iter().map(work).collect()
    }
}

/// Give every node a one-hot encoding of its (capped) degree when the
/// dataset carries no node features; datasets with features pass through
/// unchanged. The feature dimension is `min(max degree + 1, cap)` over
/// the whole dataset and degrees at or beyond the cap share the last
/// slot.
pub fn ensure_node_features(dataset: &Dataset, cap: usize) -> Result<Dataset> {
    if dataset.feature_dim > 0 {
        return Ok(dataset.clone());
    }
    if cap == 0 {
        return Err(Error::Invalid("degree feature cap must be positive".into()));
    }
    let max_degree = dataset
        .graphs
        .iter()
        .flat_map(|g| (0..g.n()).map(move |v| g.degree(v)))
        .max()
        .unwrap_or(0);
    let dim = (max_degree + 1).min(cap);
    let graphs = dataset
        .graphs
        .iter()
        .map(|g| {
            let rows: Vec<Vec<f64>> = (0..g.n())
                .map(|v| {
                    let mut row = vec![0.0; dim];
                    row[g.degree(v).min(dim - 1)] = 1.0;
                    row
                })
                .collect();
            g.clone().with_features(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset.name.clone(), graphs, dataset.num_classes)
}

/// Model and operator choices for a graph classification run.
#[derive(Debug, Clone)]
pub struct GraphClassifierSpec {
    pub kind: LayerKind,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub readout: Readout,
    pub jumping: bool,
    pub learnable_epsilon: bool,
    pub transform: Transform,
    pub aggregator: GinAggregator,
    pub degree_source: DegreeSource,
}

impl GraphClassifierSpec {
    /// GIN-0 baseline: five layers, sum readout over every layer.
    pub fn gin_default() -> Self {
        GraphClassifierSpec {
            kind: LayerKind::Gin,
            num_layers: 5,
            hidden_dim: 64,
            readout: Readout::Sum,
            jumping: true,
            learnable_epsilon: false,
            transform: Transform::FirstOrder,
            aggregator: GinAggregator::Binary,
            degree_source: DegreeSource::Operand,
        }
    }

    /// GCN baseline: two layers, mean readout of the last layer.
    pub fn gcn_default() -> Self {
        GraphClassifierSpec {
            kind: LayerKind::Gcn,
            num_layers: 2,
            hidden_dim: 64,
            readout: Readout::Mean,
            jumping: false,
            learnable_epsilon: false,
            transform: Transform::FirstOrder,
            aggregator: GinAggregator::Binary,
            degree_source: DegreeSource::Operand,
        }
    }

    /// The same spec with the enlarged-neighborhood operator.
    pub fn enlarged(mut self) -> Self {
        self.transform = Transform::Enlarged;
        self
    }
}

/// One fold's worth of graphs packed into a single disjoint-union batch.
struct GraphBatch {
    features: Tensor,
    operator: Rc<CsrMatrix>,
    segments: Vec<usize>,
    labels: Vec<usize>,
}

fn batch_graphs(dataset: &Dataset, indices: &[usize], spec: &GraphClassifierSpec) -> Result<GraphBatch> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut blocks: Vec<CsrMatrix> = Vec::new();
    let mut segments: Vec<usize> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (slot, &idx) in indices.iter().enumerate() {
        let g = &dataset.graphs[idx];
        let features = g.node_features().ok_or_else(|| {
            Error::Invalid(format!(
                "graph {idx} has no node features; call ensure_node_features first"
            ))
        })?;
        rows.extend(features.iter().cloned());
        blocks.push(build_operator_with(
            spec.kind,
            spec.transform,
            spec.aggregator,
            spec.degree_source,
            g,
        )?);
        segments.extend(std::iter::repeat(slot).take(g.n()));
        labels.push(
            g.graph_label()
                .ok_or_else(|| Error::Invalid(format!("graph {idx} has no label")))?,
        );
    }
    Ok(GraphBatch {
        features: Tensor::from_rows(&rows)?,
        operator: Rc::new(CsrMatrix::block_diagonal(&blocks)),
        segments,
        labels,
    })
}

fn classifier_accuracy(model: &GraphClassifier, batch: &GraphBatch) -> Result<f64> {
    let tape = Tape::new();
    let logits = model.forward(
        &tape,
        &batch.features,
        &batch.operator,
        &batch.segments,
        batch.labels.len(),
        0.0,
        None,
    )?;
    accuracy(&argmax_rows(&logits), &batch.labels)
}

fn argmax_rows(t: &Tensor) -> Vec<usize> {
    let shape = t.shape();
    let (rows, cols) = (shape[0], shape[1]);
    let values = t.values();
    (0..rows)
        .map(|r| {
            let row = &values[r * cols..(r + 1) * cols];
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Split a training pool into an inner train set and a roughly 10%
/// stratified validation set.
fn inner_validation_split(
    pool: &[usize],
    labels: &[usize],
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if pool.len() < 2 {
        return Err(Error::Invalid(format!(
            "training pool of {} items cannot spare a validation set",
            pool.len()
        )));
    }
    let pool_labels: Vec<usize> = pool.iter().map(|&i| labels[i]).collect();
    let k = 10.min(pool.len());
    let inner = stratified_kfold(&pool_labels, k, seed)?;
    let val = inner.test_indices(0).iter().map(|&p| pool[p]).collect();
    let train = inner.train_indices(0).iter().map(|&p| pool[p]).collect();
    Ok((train, val))
}

/// Train a classifier on every graph in the dataset, with no held-out
/// split, and return the fitted model. This is the entry point for
/// diagnostics that inspect a trained model rather than measure
/// generalization.
pub fn train_graph_classifier(
    dataset: &Dataset,
    spec: &GraphClassifierSpec,
    seed: u64,
    settings: &TrainSettings,
) -> Result<GraphClassifier> {
    if dataset.graphs.is_empty() {
        return Err(Error::Invalid("cannot train on an empty dataset".into()));
    }
    if dataset.feature_dim == 0 {
        return Err(Error::Invalid(
            "dataset has no node features; call ensure_node_features first".into(),
        ));
    }
    let indices: Vec<usize> = (0..dataset.graphs.len()).collect();
    let batch = batch_graphs(dataset, &indices, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let model = GraphClassifier::new(
        &mut params,
        &ClassifierConfig {
            kind: spec.kind,
            num_layers: spec.num_layers,
            feature_dim: dataset.feature_dim,
            hidden_dim: spec.hidden_dim,
            num_classes: dataset.num_classes,
            readout: spec.readout,
            jumping: spec.jumping,
            learnable_epsilon: spec.learnable_epsilon,
        },
        &mut rng,
    )?;
    let mut adam = settings.optimizer();
    for _ in 0..settings.epochs {
        let tape = Tape::new();
        let logits = model.forward(
            &tape,
            &batch.features,
            &batch.operator,
            &batch.segments,
            batch.labels.len(),
            settings.dropout,
            Some(&mut rng),
        )?;
        let loss = tape.softmax_cross_entropy(&logits, &batch.labels)?;
        tape.backward(&loss)?;
        adam.step(&params)?;
    }
    Ok(model)
}

/// Stratified `folds`-fold cross-validation of a graph classifier.
/// Returns one `[test accuracy]` row per fold, in fold order. Each fold
/// trains on its own 90% / 10% train/validation split of the remaining
/// graphs and reports the test accuracy chosen by the selection rule.
pub fn run_graph_classification(
    dataset: &Dataset,
    spec: &GraphClassifierSpec,
    folds: usize,
    seed: u64,
    settings: &TrainSettings,
) -> Result<Vec<Vec<f64>>> {
    if dataset.feature_dim == 0 {
        return Err(Error::Invalid(
            "dataset has no node features; call ensure_node_features first".into(),
        ));
    }
    let labels: Vec<usize> = dataset
        .graphs
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            g.graph_label()
                .ok_or_else(|| Error::Invalid(format!("graph {idx} has no label")))
        })
        .collect::<Result<_>>()?;
    let split = stratified_kfold(&labels, folds, seed)?;

    map_folds(folds, settings.single_thread, |fold| {
        let fold_seed = seed + fold as u64;
        let test_idx = split.test_indices(fold);
        let pool = split.train_indices(fold);
        let (train_idx, val_idx) = inner_validation_split(&pool, &labels, fold_seed)?;

        let train = batch_graphs(dataset, &train_idx, spec)?;
        let val = batch_graphs(dataset, &val_idx, spec)?;
        let test = batch_graphs(dataset, &test_idx, spec)?;

        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
        let mut params = ParamSet::new();
        let model = GraphClassifier::new(
            &mut params,
            &ClassifierConfig {
                kind: spec.kind,
                num_layers: spec.num_layers,
                feature_dim: dataset.feature_dim,
                hidden_dim: spec.hidden_dim,
                num_classes: dataset.num_classes,
                readout: spec.readout,
                jumping: spec.jumping,
                learnable_epsilon: spec.learnable_epsilon,
            },
            &mut rng,
        )?;
        let mut adam = settings.optimizer();
        let mut tracker = EpochTracker::new(settings);
        for epoch in 0..settings.epochs {
            let tape = Tape::new();
            let logits = model.forward(
                &tape,
                &train.features,
                &train.operator,
                &train.segments,
                train.labels.len(),
                settings.dropout,
                Some(&mut rng),
            )?;
            let loss = tape.softmax_cross_entropy(&logits, &train.labels)?;
            tape.backward(&loss)?;
            adam.step(&params)?;

            let val_acc = classifier_accuracy(&model, &val)?;
            let test_acc = classifier_accuracy(&model, &test)?;
            if tracker.record(epoch, val_acc, vec![test_acc]) {
                break;
            }
        }
        if settings.epochs == 0 {
            let val_acc = classifier_accuracy(&model, &val)?;
            let test_acc = classifier_accuracy(&model, &test)?;
            tracker.record(0, val_acc, vec![test_acc]);
        }
        Ok(tracker.into_result())
    })
}

/// Model and split choices for a link prediction run.
#[derive(Debug, Clone)]
pub struct LinkPredictionSpec {
    pub transform: Transform,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub variational: bool,
    /// Use node features when the graph has them; otherwise the encoder
    /// runs on identity features.
    pub use_features: bool,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for LinkPredictionSpec {
    fn default() -> Self {
        LinkPredictionSpec {
            transform: Transform::FirstOrder,
            hidden_dim: 128,
            latent_dim: 64,
            variational: true,
            use_features: true,
            val_fraction: 0.05,
            test_fraction: 0.10,
        }
    }
}

/// Sample `count` uniform non-edges of `g` (with replacement) for
/// reconstruction targets.
fn sample_negative_pairs(
    g: &Graph,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let cap = 1000 * count.max(1);
    while pairs.len() < count {
        attempts += 1;
        if attempts > cap {
            return Err(Error::Invalid(
                "negative sampling failed; the graph is too dense".into(),
            ));
        }
        let a = rng.gen_range(0..g.n());
        let b = rng.gen_range(0..g.n());
        if a == b || g.has_edge(a, b) {
            continue;
        }
        pairs.push((a.min(b), a.max(b)));
    }
    Ok(pairs)
}

fn lp_eval_scores(
    model: &GraphAutoencoder,
    features: Option<&Tensor>,
    a_hat: &Rc<CsrMatrix>,
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let encoding = model.encode(&tape, features, a_hat, None)?;
    let logits = model.decode_edges(&tape, &encoding.z, pairs)?;
    Ok(logits.values())
}

/// Train a (variational) graph autoencoder `repeats` times on fresh edge
/// splits and return one `[test AUC, test AP]` row per repetition. The
/// message-passing operator is always built from the training edges
/// only, so held-out edges influence nothing but evaluation.
pub fn run_link_prediction(
    g: &Graph,
    spec: &LinkPredictionSpec,
    repeats: usize,
    seed: u64,
    settings: &TrainSettings,
) -> Result<Vec<Vec<f64>>> {
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be positive".into()));
    }
    map_folds(repeats, settings.single_thread, |run| {
        let run_seed = seed + run as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let split = split_edges_for_lp(g, spec.val_fraction, spec.test_fraction, run_seed)?;
        let train_g = split.train_graph(g)?;
        let a_hat = Rc::new(CsrMatrix::from_normalized(&build_transform_with(
            spec.transform,
            &train_g,
            DegreeSource::Operand,
        )));

        let with_features = spec.use_features && g.feature_dim() > 0;
        let features = if with_features {
            Some(Tensor::from_rows(
                g.node_features().expect("feature_dim > 0 implies features"),
            )?)
        } else {
            None
        };
        let mut params = ParamSet::new();
        let model = GraphAutoencoder::new(
            &mut params,
            g.n(),
            &AutoencoderConfig {
                feature_dim: with_features.then(|| g.feature_dim()),
                hidden_dim: spec.hidden_dim,
                latent_dim: spec.latent_dim,
                variational: spec.variational,
            },
            &mut rng,
        )?;
        let mut adam = settings.optimizer();

        let mut val_pairs = split.val_edges.clone();
        val_pairs.extend(&split.val_negatives);
        let val_labels: Vec<bool> = split
            .val_edges
            .iter()
            .map(|_| true)
            .chain(split.val_negatives.iter().map(|_| false))
            .collect();
        let mut test_pairs = split.test_edges.clone();
        test_pairs.extend(&split.test_negatives);
        let test_labels: Vec<bool> = split
            .test_edges
            .iter()
            .map(|_| true)
            .chain(split.test_negatives.iter().map(|_| false))
            .collect();

        let mut tracker = EpochTracker::new(settings);
        for epoch in 0..settings.epochs {
            let tape = Tape::new();
            let encoding = model.encode(
                &tape,
                features.as_ref(),
                &a_hat,
                if spec.variational { Some(&mut rng) } else { None },
            )?;
            let negatives = sample_negative_pairs(&train_g, split.train_edges.len(), &mut rng)?;
            let mut pairs = split.train_edges.clone();
            pairs.extend(negatives);
            let mut targets = vec![1.0; split.train_edges.len()];
            targets.extend(vec![0.0; pairs.len() - split.train_edges.len()]);
            let targets = Tensor::new(&[pairs.len()], targets)?;
            let logits = model.decode_edges(&tape, &encoding.z, &pairs)?;
            let loss = model.loss(&tape, &logits, &targets, &encoding, g.n(), 1.0)?;
            tape.backward(&loss)?;
            adam.step(&params)?;

            let val_scores = lp_eval_scores(&model, features.as_ref(), &a_hat, &val_pairs)?;
            let val_auc = roc_auc(&val_scores, &val_labels)?;
            let test_scores = lp_eval_scores(&model, features.as_ref(), &a_hat, &test_pairs)?;
            let test_auc = roc_auc(&test_scores, &test_labels)?;
            let test_ap = average_precision(&test_scores, &test_labels)?;
            if tracker.record(epoch, val_auc, vec![test_auc, test_ap]) {
                break;
            }
        }
        if settings.epochs == 0 {
            let val_scores = lp_eval_scores(&model, features.as_ref(), &a_hat, &val_pairs)?;
            let val_auc = roc_auc(&val_scores, &val_labels)?;
            let test_scores = lp_eval_scores(&model, features.as_ref(), &a_hat, &test_pairs)?;
            let test_auc = roc_auc(&test_scores, &test_labels)?;
            let test_ap = average_precision(&test_scores, &test_labels)?;
            tracker.record(0, val_auc, vec![test_auc, test_ap]);
        }
        Ok(tracker.into_result())
    })
}

/// Model and corruption choices for node classification on a graph with
/// missing edges.
#[derive(Debug, Clone)]
pub struct MissingEdgeSpec {
    pub transform: Transform,
    pub hidden_dim: usize,
    pub num_layers: usize,
    /// Fraction of edges kept; 1.0 evaluates the intact graph.
    pub keep_fraction: f64,
}

impl Default for MissingEdgeSpec {
    fn default() -> Self {
        MissingEdgeSpec {
            transform: Transform::FirstOrder,
            hidden_dim: 16,
            num_layers: 2,
            keep_fraction: 1.0,
        }
    }
}

/// Drop edges once per run, then cross-validate a node classifier over
/// the corrupted graph's nodes. Returns one `[test accuracy]` row per
/// fold. The transform (including any second-hop neighborhoods) is
/// computed on the corrupted graph, never the intact one.
pub fn run_missing_edges(
    g: &Graph,
    spec: &MissingEdgeSpec,
    folds: usize,
    seed: u64,
    settings: &TrainSettings,
) -> Result<Vec<Vec<f64>>> {
    let labels = g
        .node_labels()
        .ok_or_else(|| Error::Invalid("node classification requires node labels".into()))?
        .to_vec();
    let features = g
        .node_features()
        .ok_or_else(|| Error::Invalid("node classification requires node features".into()))?;
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;

    let corrupted = corrupt_edges(g, spec.keep_fraction, seed)?;
    let normalized = build_transform_with(spec.transform, &corrupted, DegreeSource::Operand);
    let split = stratified_kfold(&labels, folds, seed)?;

    map_folds(folds, settings.single_thread, |fold| {
        let a_hat = Rc::new(CsrMatrix::from_normalized(&normalized));
        let x = Tensor::from_rows(features)?;
        let fold_seed = seed + fold as u64;
        let test_nodes = split.test_indices(fold);
        let pool = split.train_indices(fold);
        let (train_nodes, val_nodes) = inner_validation_split(&pool, &labels, fold_seed)?;
        let train_labels: Vec<usize> = train_nodes.iter().map(|&i| labels[i]).collect();
        let val_labels: Vec<usize> = val_nodes.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<usize> = test_nodes.iter().map(|&i| labels[i]).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
        let mut params = ParamSet::new();
        let model = NodeClassifier::new(
            &mut params,
            g.feature_dim(),
            spec.hidden_dim,
            num_classes,
            spec.num_layers,
            &mut rng,
        )?;
        let mut adam = settings.optimizer();
        let mut tracker = EpochTracker::new(settings);
        for epoch in 0..settings.epochs {
            let tape = Tape::new();
            let logits = model.forward(&tape, &x, &a_hat, settings.dropout, Some(&mut rng))?;
            let train_logits = tape.gather_rows(&logits, &train_nodes)?;
            let loss = tape.softmax_cross_entropy(&train_logits, &train_labels)?;
            tape.backward(&loss)?;
            adam.step(&params)?;

            let eval_tape = Tape::new();
            let eval_logits = model.forward(&eval_tape, &x, &a_hat, 0.0, None)?;
            let preds = argmax_rows(&eval_logits);
            let val_preds: Vec<usize> = val_nodes.iter().map(|&i| preds[i]).collect();
            let test_preds: Vec<usize> = test_nodes.iter().map(|&i| preds[i]).collect();
            let val_acc = accuracy(&val_preds, &val_labels)?;
            let test_acc = accuracy(&test_preds, &test_labels)?;
            if tracker.record(epoch, val_acc, vec![test_acc]) {
                break;
            }
        }
        if settings.epochs == 0 {
            let eval_tape = Tape::new();
            let eval_logits = model.forward(&eval_tape, &x, &a_hat, 0.0, None)?;
            let preds = argmax_rows(&eval_logits);
            let val_preds: Vec<usize> = val_nodes.iter().map(|&i| preds[i]).collect();
            let test_preds: Vec<usize> = test_nodes.iter().map(|&i| preds[i]).collect();
            let val_acc = accuracy(&val_preds, &val_labels)?;
            let test_acc = accuracy(&test_preds, &test_labels)?;
            tracker.record(0, val_acc, vec![test_acc]);
        }
        Ok(tracker.into_result())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{complete_graph, gnp_random_graph};

    fn tiny_settings() -> TrainSettings {
        TrainSettings {
            epochs: 30,
            learning_rate: 0.01,
            weight_decay: 0.0,
            dropout: 0.0,
            patience: 30,
            selection: SelectionRule::BestValidation,
            single_thread: true,
        }
    }

    /// Small two-class dataset separable by density: sparse paths vs
    /// dense complete graphs.
    fn density_dataset() -> Dataset {
        let mut graphs = Vec::new();
        for size in 4..14 {
            graphs.push(crate::synth::path_graph(size).with_label(0));
            graphs.push(complete_graph(size).with_label(1));
        }
        let dataset = Dataset::new("density", graphs, 2).unwrap();
        ensure_node_features(&dataset, 16).unwrap()
    }

    #[test]
    fn degree_features_are_one_hot_and_capped() {
        let graphs = vec![
            crate::synth::star_graph(6).with_label(0),
            crate::synth::path_graph(3).with_label(1),
        ];
        let dataset = Dataset::new("stars", graphs, 2).unwrap();
        let with = ensure_node_features(&dataset, 4).unwrap();
        // max degree is 5 (the star hub) but the cap keeps dim at 4
        assert_eq!(with.feature_dim, 4);
        let hub = &with.graphs[0].node_features().unwrap()[0];
        assert_eq!(hub, &vec![0.0, 0.0, 0.0, 1.0]);
        let leaf = &with.graphs[0].node_features().unwrap()[1];
        assert_eq!(leaf, &vec![0.0, 1.0, 0.0, 0.0]);
        for g in &with.graphs {
            for row in g.node_features().unwrap() {
                assert_eq!(row.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn degree_features_leave_existing_features_alone() {
        let g = crate::synth::path_graph(3)
            .with_features(vec![vec![7.0]; 3])
            .unwrap()
            .with_label(0);
        let dataset = Dataset::new("own-features", vec![g], 1).unwrap();
        let with = ensure_node_features(&dataset, 64).unwrap();
        assert_eq!(with.feature_dim, 1);
        assert_eq!(with.graphs[0].node_features().unwrap()[0], vec![7.0]);
    }

    #[test]
    fn graph_classification_learns_density() {
        let dataset = density_dataset();
        let spec = GraphClassifierSpec {
            num_layers: 2,
            hidden_dim: 16,
            ..GraphClassifierSpec::gin_default()
        };
        let mut settings = tiny_settings();
        settings.epochs = 80;
        settings.selection = SelectionRule::FinalEpoch;
        let rows = run_graph_classification(&dataset, &spec, 4, 7, &settings).unwrap();
        assert_eq!(rows.len(), 4);
        let mean: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        assert!(mean > 0.8, "mean accuracy {mean}");
    }

    #[test]
    fn graph_classification_is_deterministic_across_thread_modes() {
        let dataset = density_dataset();
        let spec = GraphClassifierSpec {
            num_layers: 2,
            hidden_dim: 8,
            ..GraphClassifierSpec::gin_default()
        };
        let mut settings = tiny_settings();
        settings.epochs = 5;
        let serial = run_graph_classification(&dataset, &spec, 3, 5, &settings).unwrap();
        settings.single_thread = false;
        let parallel = run_graph_classification(&dataset, &spec, 3, 5, &settings).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn graph_classification_rejects_featureless_datasets() {
        let graphs = vec![
            crate::synth::path_graph(4).with_label(0),
            complete_graph(4).with_label(1),
        ];
        let dataset = Dataset::new("bare", graphs, 2).unwrap();
        let spec = GraphClassifierSpec::gin_default();
        let err = run_graph_classification(&dataset, &spec, 2, 0, &tiny_settings());
        assert!(err.is_err());
    }

    #[test]
    fn link_prediction_beats_chance_on_structured_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // two dense ring bands, sparse in between
        let g = crate::synth::two_block_graph(60, 0.8, 0.01, &mut rng);
        let spec = LinkPredictionSpec::default();
        let mut settings = tiny_settings();
        settings.epochs = 80;
        let rows = run_link_prediction(&g, &spec, 2, 11, &settings).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.len(), 2);
            assert!(row[0] > 0.6, "AUC {}", row[0]);
            assert!(row[1] > 0.5, "AP {}", row[1]);
        }
    }

    #[test]
    fn missing_edges_learns_block_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = crate::synth::sbm_node_graph(80, 2, 0.3, 0.02, 4, 0.1, &mut rng);
        let spec = MissingEdgeSpec {
            keep_fraction: 0.75,
            ..MissingEdgeSpec::default()
        };
        let mut settings = tiny_settings();
        settings.epochs = 60;
        settings.weight_decay = 5e-4;
        let rows = run_missing_edges(&g, &spec, 4, 13, &settings).unwrap();
        assert_eq!(rows.len(), 4);
        let mean: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        assert!(mean > 0.8, "mean accuracy {mean}");
    }

    #[test]
    fn missing_edges_requires_node_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = gnp_random_graph(20, 0.3, &mut rng);
        let spec = MissingEdgeSpec::default();
        let err = run_missing_edges(&g, &spec, 3, 0, &tiny_settings());
        assert!(err.is_err());
    }

    #[test]
    fn selection_rule_parses() {
        assert_eq!(
            "best-val".parse::<SelectionRule>().unwrap(),
            SelectionRule::BestValidation
        );
        assert_eq!(
            "final-epoch".parse::<SelectionRule>().unwrap(),
            SelectionRule::FinalEpoch
        );
        assert!("sometimes".parse::<SelectionRule>().is_err());
    }
}
