//! Mutual-information diagnostics: a histogram MI estimator over
//! equal-frequency bins and a probe that compares how much information a
//! node's embedding shares with the mean embedding of its distance-1
//! neighborhood versus the enlarged (distance 1-or-2) neighborhood.
//!
//! The probe is a diagnostic, not a training signal: it reports empirical
//! estimates without asserting any decomposition of the underlying
//! quantities.

use std::fmt;
use std::fmt::Write as _;
use std::rc::Rc;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{adjacency, Dataset};
use crate::nn::{build_operator, GinAggregator, GraphClassifier};
use crate::tensor::{Tape, Tensor};
use crate::transforms::{enlarge, Transform};

/// Plug-in mutual information estimate in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub value: f64,
    pub bins: usize,
    pub sample_count: usize,
}

/// Rank each value into one of `bins` equal-frequency bins. Equal values
/// always share a bin (the bin of the run's first rank), so the
/// assignment is invariant under strictly increasing maps of the values.
fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("values are finite"));
    let mut assignment = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let bin = start * bins / n;
        for &idx in &order[start..end] {
            assignment[idx] = bin;
        }
        start = end;
    }
    assignment
}

/// Histogram mutual information between two scalar sample vectors using
/// equal-frequency binning, in nats.
///
/// The estimator is exactly symmetric in its arguments and invariant
/// under strictly increasing maps of either variable. Requires at least
/// `4 * bins` samples so every bin can be meaningfully occupied.
pub fn binned_mi(x: &[f64], y: &[f64], bins: usize) -> Result<MiEstimate> {
    if bins < 2 {
        return Err(Error::Invalid(format!("bin count {bins} < 2")));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "binned_mi: {} x samples vs {} y samples",
            x.len(),
            y.len()
        )));
    }
    let minimum = 4 * bins;
    if x.len() < minimum {
        return Err(Error::Invalid(format!(
            "binned_mi with {bins} bins needs at least {minimum} samples, got {}",
            x.len()
        )));
    }

    let n = x.len();
    let x_bins = equal_frequency_bins(x, bins);
    let y_bins = equal_frequency_bins(y, bins);
    let mut joint = vec![0usize; bins * bins];
    let mut x_marginal = vec![0usize; bins];
    let mut y_marginal = vec![0usize; bins];
    for (&i, &j) in x_bins.iter().zip(&y_bins) {
        joint[i * bins + j] += 1;
        x_marginal[i] += 1;
        y_marginal[j] += 1;
    }

    // summing the terms in sorted order makes the result independent of
    // the joint matrix's orientation, so mi(x, y) == mi(y, x) exactly
    let mut terms = Vec::new();
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / n as f64;
            let ratio = (c * n) as f64 / (x_marginal[i] * y_marginal[j]) as f64;
            terms.push(p * ratio.ln());
        }
    }
    terms.sort_by(f64::total_cmp);
    let raw: f64 = terms.iter().sum();
    // the plug-in estimate lies in [0, ln bins]; the clamp only absorbs
    // float roundoff at the interval's ends
    let value = raw.clamp(0.0, (bins as f64).ln());
    Ok(MiEstimate {
        value,
        bins,
        sample_count: n,
    })
}

/// Which neighborhood the probe aggregates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Distance-1 neighbors.
    D1,
    /// Distance-1 and distance-2 neighbors (the enlarged set).
    D1D2,
}

impl ProbeMode {
    pub fn id(self) -> &'static str {
        match self {
            ProbeMode::D1 => "d1",
            ProbeMode::D1D2 => "d1d2",
        }
    }
}

impl fmt::Display for ProbeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ProbeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d1" => Ok(ProbeMode::D1),
            "d1d2" => Ok(ProbeMode::D1D2),
            other => Err(Error::Config(format!(
                "unknown probe mode {other:?}, valid values: d1, d1d2"
            ))),
        }
    }
}

/// Settings for [`neighborhood_mi_probe`].
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Transform the model was trained with; its operator produces the
    /// embeddings being probed.
    pub transform: Transform,
    pub aggregator: GinAggregator,
    pub bins: usize,
    /// Number of randomly chosen embedding coordinates averaged per layer.
    pub max_coordinates: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            transform: Transform::FirstOrder,
            aggregator: GinAggregator::Binary,
            bins: 8,
            max_coordinates: 8,
            seed: 0,
        }
    }
}

/// One layer's probe outcome.
#[derive(Debug, Clone)]
pub struct ProbeLayerReport {
    pub layer: usize,
    pub mode: ProbeMode,
    pub mean_mi: f64,
    pub coordinate_count: usize,
    pub sample_count: usize,
}

/// Estimate, per layer, the mean MI between a node's embedding
/// coordinate and the mean of that coordinate over the node's
/// neighborhood (distance-1, or enlarged under [`ProbeMode::D1D2`]).
/// Samples pool across every node of every graph; nodes with empty
/// neighborhoods are skipped.
pub fn neighborhood_mi_probe(
    dataset: &Dataset,
    model: &GraphClassifier,
    mode: ProbeMode,
    config: &ProbeConfig,
) -> Result<Vec<ProbeLayerReport>> {
    let num_layers = model.config().num_layers;
    // per layer: per coordinate slot, the (own, neighbor mean) samples
    let mut own: Vec<Vec<Vec<f64>>> = vec![Vec::new(); num_layers];
    let mut neighbor: Vec<Vec<Vec<f64>>> = vec![Vec::new(); num_layers];
    let mut coordinates: Vec<Vec<usize>> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    for g in &dataset.graphs {
        let features = g
            .node_features()
            .ok_or_else(|| Error::Invalid("probe requires node features".into()))?;
        let h = Tensor::from_rows(features)?;
        let operator = Rc::new(build_operator(
            model.config().kind,
            config.transform,
            config.aggregator,
            g,
        )?);
        let tape = Tape::new();
        let embeddings = model.layer_embeddings(&tape, &h, &operator)?;

        let neighbor_sets = match mode {
            ProbeMode::D1 => adjacency(g).neighbor_lists(),
            ProbeMode::D1D2 => enlarge(g).neighbor_lists(),
        };

        for (layer, embedding) in embeddings.iter().enumerate() {
            let dim = embedding.shape()[1];
            if coordinates.len() <= layer {
                // fix the coordinate subset on first sight of the layer
                let mut all: Vec<usize> = (0..dim).collect();
                all.shuffle(&mut rng);
                all.truncate(config.max_coordinates.min(dim));
                all.sort_unstable();
                own[layer] = vec![Vec::new(); all.len()];
                neighbor[layer] = vec![Vec::new(); all.len()];
                coordinates.push(all);
            }
            let values = embedding.values();
            for v in 0..g.n() {
                let set = &neighbor_sets[v];
                if set.is_empty() {
                    continue;
                }
                for (slot, &c) in coordinates[layer].iter().enumerate() {
                    let mean: f64 =
                        set.iter().map(|&u| values[u * dim + c]).sum::<f64>() / set.len() as f64;
                    own[layer][slot].push(values[v * dim + c]);
                    neighbor[layer][slot].push(mean);
                }
            }
        }
    }

    let mut reports = Vec::with_capacity(num_layers);
    for layer in 0..num_layers {
        let slots = &coordinates[layer];
        if own[layer].iter().all(|samples| samples.is_empty()) {
            return Err(Error::Invalid(
                "every neighborhood is empty; the probe has nothing to sample".into(),
            ));
        }
        let mut total = 0.0;
        let mut sample_count = 0;
        for slot in 0..slots.len() {
            let estimate = binned_mi(&own[layer][slot], &neighbor[layer][slot], config.bins)?;
            total += estimate.value;
            sample_count = estimate.sample_count;
        }
        reports.push(ProbeLayerReport {
            layer,
            mode,
            mean_mi: total / slots.len() as f64,
            coordinate_count: slots.len(),
            sample_count,
        });
    }
    Ok(reports)
}

/// CSV rendering of probe reports.
pub fn probe_csv(reports: &[ProbeLayerReport]) -> String {
    let mut out = String::from("layer,mode,mean_mi,coordinate_count,sample_count\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.layer, r.mode, r.mean_mi, r.coordinate_count, r.sample_count
        );
    }
    out
}
