//! GNN layers and model heads: GCN and GIN layers, a graph-level
//! classifier, a per-node classifier, and a (variational) graph
//! autoencoder with an inner-product edge decoder.
//!
//! Every layer takes its message-passing operator as an explicit CSR
//! matrix, so the two-hop (s) variants differ from the baselines only in
//! the operator fed to [`build_operator`], never in layer code.

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{adjacency, Graph};
use crate::tensor::{CsrMatrix, ParamSet, Tape, Tensor};
use crate::transforms::{build_transform_with, enlarge, DegreeSource, Transform};

/// Glorot-style uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
pub fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let values: Vec<f64> = (0..fan_in * fan_out)
        .map(|_| rng.gen::<f64>() * 2.0 * bound - bound)
        .collect();
    Tensor::parameter(&[fan_in, fan_out], values).expect("bounded init values are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// One graph convolution: sigma(A_hat * H * W). No bias term.
pub struct GcnLayer {
    w: Tensor,
    activation: Activation,
}

impl GcnLayer {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        d_in: usize,
        d_out: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<GcnLayer> {
        let w = params.register(format!("{name}.w"), glorot(rng, d_in, d_out))?;
        Ok(GcnLayer { w, activation })
    }

    pub fn forward(&self, tape: &Tape, h: &Tensor, a_hat: &Rc<CsrMatrix>) -> Result<Tensor> {
        let projected = tape.matmul(h, &self.w)?;
        let mixed = tape.spmm(a_hat, &projected)?;
        Ok(self.activate(tape, mixed))
    }

    /// Forward with implicit identity features (H = I), so H * W = W; the
    /// weight itself is the node feature table.
    pub fn forward_identity(&self, tape: &Tape, a_hat: &Rc<CsrMatrix>) -> Result<Tensor> {
        let mixed = tape.spmm(a_hat, &self.w)?;
        Ok(self.activate(tape, mixed))
    }

    fn activate(&self, tape: &Tape, x: Tensor) -> Tensor {
        match self.activation {
            Activation::Relu => tape.relu(&x),
            Activation::Identity => x,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.w.shape()[1]
    }
}

/// The self-term weight in a GIN layer: fixed (GIN-0) or trainable (GIN-eps).
pub enum EpsilonMode {
    Fixed(f64),
    Learnable(Tensor),
}

/// GIN update: MLP((1 + eps) * h_v + sum of neighbor rows), where the
/// neighbor sum comes from the supplied operator and the MLP is two affine
/// maps with a relu between.
pub struct GinLayer {
    epsilon: EpsilonMode,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
}

impl GinLayer {
    pub fn new(
        params: &mut ParamSet,
        name: &str,
        d_in: usize,
        d_hidden: usize,
        d_out: usize,
        learnable_epsilon: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<GinLayer> {
        let epsilon = if learnable_epsilon {
            let eps = params.register(
                format!("{name}.eps"),
                Tensor::parameter(&[1], vec![0.0])?,
            )?;
            EpsilonMode::Learnable(eps)
        } else {
            EpsilonMode::Fixed(0.0)
        };
        let w1 = params.register(format!("{name}.w1"), glorot(rng, d_in, d_hidden))?;
        let b1 = params.register(
            format!("{name}.b1"),
            Tensor::parameter(&[1, d_hidden], vec![0.0; d_hidden])?,
        )?;
        let w2 = params.register(format!("{name}.w2"), glorot(rng, d_hidden, d_out))?;
        let b2 = params.register(
            format!("{name}.b2"),
            Tensor::parameter(&[1, d_out], vec![0.0; d_out])?,
        )?;
        Ok(GinLayer {
            epsilon,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn forward(&self, tape: &Tape, h: &Tensor, neighbors: &Rc<CsrMatrix>) -> Result<Tensor> {
        let aggregated = tape.spmm(neighbors, h)?;
        let self_term = match &self.epsilon {
            EpsilonMode::Fixed(eps) => tape.scale(h, 1.0 + eps),
            EpsilonMode::Learnable(eps) => {
                let one_plus = tape.add_scalar(eps, 1.0);
                tape.scale_by(h, &one_plus)?
            }
        };
        let combined = tape.add(&aggregated, &self_term)?;
        let hidden = tape.relu(&tape.add(&tape.matmul(&combined, &self.w1)?, &self.b1)?);
        tape.add(&tape.matmul(&hidden, &self.w2)?, &self.b2)
    }

    pub fn input_dim(&self) -> usize {
        self.w1.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.w2.shape()[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Gcn,
    Gin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Sum,
    Mean,
}

impl FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Readout> {
        match s {
            "sum" => Ok(Readout::Sum),
            "mean" => Ok(Readout::Mean),
            other => Err(Error::Config(format!(
                "unknown readout {other:?}, valid values: sum, mean"
            ))),
        }
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Sum => "sum",
            Readout::Mean => "mean",
        })
    }
}

/// How a GIN layer interprets a transform id when building its operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GinAggregator {
    /// Neighbor sums over the binary (possibly enlarged) adjacency.
    #[default]
    Binary,
    /// The symmetrically normalized operator, as a GCN would use.
    Normalized,
}

impl FromStr for GinAggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<GinAggregator> {
        match s {
            "binary" => Ok(GinAggregator::Binary),
            "normalized" => Ok(GinAggregator::Normalized),
            other => Err(Error::Config(format!(
                "unknown gin-aggregator {other:?}, valid values: binary, normalized"
            ))),
        }
    }
}

impl fmt::Display for GinAggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GinAggregator::Binary => "binary",
            GinAggregator::Normalized => "normalized",
        })
    }
}

/// Build the message-passing operator a model consumes for one graph.
pub fn build_operator(
    kind: LayerKind,
    transform: Transform,
    aggregator: GinAggregator,
    g: &Graph,
) -> Result<CsrMatrix> {
    build_operator_with(kind, transform, aggregator, DegreeSource::default(), g)
}

/// [`build_operator`] with an explicit degree source for the normalizer,
/// for the first-order-degree ablation. The degree source only affects
/// normalized operators.
pub fn build_operator_with(
    kind: LayerKind,
    transform: Transform,
    aggregator: GinAggregator,
    degrees: DegreeSource,
    g: &Graph,
) -> Result<CsrMatrix> {
    match (kind, aggregator) {
        (LayerKind::Gcn, _) | (LayerKind::Gin, GinAggregator::Normalized) => Ok(
            CsrMatrix::from_normalized(&build_transform_with(transform, g, degrees)),
        ),
        (LayerKind::Gin, GinAggregator::Binary) => match transform {
            Transform::FirstOrder => Ok(CsrMatrix::from_binary(&adjacency(g))),
            Transform::Enlarged => Ok(CsrMatrix::from_binary(&enlarge(g))),
            other => Err(Error::Config(format!(
                "transform {other} has no binary neighbor set; use gin-aggregator = normalized"
            ))),
        },
    }
}

enum Layer {
    Gcn(GcnLayer),
    Gin(GinLayer),
}

impl Layer {
    fn forward(&self, tape: &Tape, h: &Tensor, op: &Rc<CsrMatrix>) -> Result<Tensor> {
        match self {
            Layer::Gcn(layer) => layer.forward(tape, h, op),
            Layer::Gin(layer) => layer.forward(tape, h, op),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub kind: LayerKind,
    pub num_layers: usize,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub readout: Readout,
    /// Sum the per-layer readouts instead of reading out only the last
    /// layer (the GIN convention).
    pub jumping: bool,
    pub learnable_epsilon: bool,
}

/// Stacked GCN or GIN layers, a graph-level readout, and an affine head.
pub struct GraphClassifier {
    layers: Vec<Layer>,
    readout: Readout,
    jumping: bool,
    head_w: Tensor,
    head_b: Tensor,
    config: ClassifierConfig,
}

impl GraphClassifier {
    pub fn new(
        params: &mut ParamSet,
        config: &ClassifierConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<GraphClassifier> {
        if config.num_layers == 0 {
            return Err(Error::Config("classifier needs at least one layer".into()));
        }
        if config.num_classes < 2 {
            return Err(Error::Config(format!(
                "classifier needs at least 2 classes, got {}",
                config.num_classes
            )));
        }
        let mut layers = Vec::with_capacity(config.num_layers);
        for idx in 0..config.num_layers {
            let d_in = if idx == 0 {
                config.feature_dim
            } else {
                config.hidden_dim
            };
            let name = format!("layer{idx}");
            let layer = match config.kind {
                LayerKind::Gcn => Layer::Gcn(GcnLayer::new(
                    params,
                    &name,
                    d_in,
                    config.hidden_dim,
                    Activation::Relu,
                    rng,
                )?),
                LayerKind::Gin => Layer::Gin(GinLayer::new(
                    params,
                    &name,
                    d_in,
                    config.hidden_dim,
                    config.hidden_dim,
                    config.learnable_epsilon,
                    rng,
                )?),
            };
            layers.push(layer);
        }
        let head_w = params.register("head.w", glorot(rng, config.hidden_dim, config.num_classes))?;
        let head_b = params.register(
            "head.b",
            Tensor::parameter(&[1, config.num_classes], vec![0.0; config.num_classes])?,
        )?;
        Ok(GraphClassifier {
            layers,
            readout: config.readout,
            jumping: config.jumping,
            head_w,
            head_b,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    /// Batched forward over stacked node features: `h` holds every node of
    /// every graph, `operator` is the block-diagonal operator, and
    /// `segment_ids[i]` names the graph of node i. Returns
    /// [num_graphs, num_classes] logits. Dropout applies before each layer
    /// when a rate and RNG are given (training mode).
    pub fn forward(
        &self,
        tape: &Tape,
        h: &Tensor,
        operator: &Rc<CsrMatrix>,
        segment_ids: &[usize],
        num_graphs: usize,
        dropout: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor> {
        let mut hidden = h.clone();
        let mut pooled: Option<Tensor> = None;
        for layer in &self.layers {
            if dropout > 0.0 {
                if let Some(rng) = rng.as_deref_mut() {
                    hidden = tape.dropout(&hidden, dropout, rng)?;
                }
            }
            hidden = layer.forward(tape, &hidden, operator)?;
            if self.jumping {
                let summary = self.read_out(tape, &hidden, segment_ids, num_graphs)?;
                pooled = Some(match pooled {
                    Some(total) => tape.add(&total, &summary)?,
                    None => summary,
                });
            }
        }
        let summary = match pooled {
            Some(total) => total,
            None => self.read_out(tape, &hidden, segment_ids, num_graphs)?,
        };
        tape.add(&tape.matmul(&summary, &self.head_w)?, &self.head_b)
    }

    fn read_out(
        &self,
        tape: &Tape,
        h: &Tensor,
        segment_ids: &[usize],
        num_graphs: usize,
    ) -> Result<Tensor> {
        match self.readout {
            Readout::Sum => tape.segment_sum(h, segment_ids, num_graphs),
            Readout::Mean => tape.segment_mean(h, segment_ids, num_graphs),
        }
    }

    /// Node embeddings after every layer, in layer order, with no
    /// dropout. Used by diagnostics that inspect intermediate
    /// representations.
    pub fn layer_embeddings(
        &self,
        tape: &Tape,
        h: &Tensor,
        operator: &Rc<CsrMatrix>,
    ) -> Result<Vec<Tensor>> {
        let mut hidden = h.clone();
        let mut embeddings = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            hidden = layer.forward(tape, &hidden, operator)?;
            embeddings.push(hidden.clone());
        }
        Ok(embeddings)
    }

    /// Evaluate one graph: builds its operator from the transform id and
    /// returns [1, num_classes] logits. Deterministic (no dropout).
    pub fn classify_graph(
        &self,
        g: &Graph,
        transform: Transform,
        aggregator: GinAggregator,
    ) -> Result<Tensor> {
        let features = g
            .node_features()
            .ok_or_else(|| Error::Invalid("graph has no node features".into()))?;
        if g.feature_dim() != self.config.feature_dim {
            return Err(Error::Dimension(format!(
                "graph features have dim {}, model expects {}",
                g.feature_dim(),
                self.config.feature_dim
            )));
        }
        let h = Tensor::from_rows(features)?;
        let operator = Rc::new(build_operator(self.config.kind, transform, aggregator, g)?);
        let ids = vec![0usize; g.n()];
        let tape = Tape::new();
        self.forward(&tape, &h, &operator, &ids, 1, 0.0, None)
    }
}

/// Stacked GCN layers ending in per-node class logits.
pub struct NodeClassifier {
    layers: Vec<GcnLayer>,
}

impl NodeClassifier {
    pub fn new(
        params: &mut ParamSet,
        feature_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        num_layers: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<NodeClassifier> {
        if num_layers == 0 {
            return Err(Error::Config("node classifier needs at least one layer".into()));
        }
        let mut layers = Vec::with_capacity(num_layers);
        for idx in 0..num_layers {
            let d_in = if idx == 0 { feature_dim } else { hidden_dim };
            let last = idx + 1 == num_layers;
            let d_out = if last { num_classes } else { hidden_dim };
            let activation = if last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(GcnLayer::new(
                params,
                &format!("layer{idx}"),
                d_in,
                d_out,
                activation,
                rng,
            )?);
        }
        Ok(NodeClassifier { layers })
    }

    /// Per-node logits [n, num_classes]; dropout applies before each layer
    /// in training mode.
    pub fn forward(
        &self,
        tape: &Tape,
        x: &Tensor,
        a_hat: &Rc<CsrMatrix>,
        dropout: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor> {
        let mut hidden = x.clone();
        for layer in &self.layers {
            if dropout > 0.0 {
                if let Some(rng) = rng.as_deref_mut() {
                    hidden = tape.dropout(&hidden, dropout, rng)?;
                }
            }
            hidden = layer.forward(tape, &hidden, a_hat)?;
        }
        Ok(hidden)
    }
}

#[derive(Debug, Clone)]
pub struct AutoencoderConfig {
    /// None means identity node features (X = I), the usual featureless
    /// link-prediction setup; the first weight then has one row per node.
    pub feature_dim: Option<usize>,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    /// Variational (mu and log sigma heads, KL regularizer) versus a
    /// deterministic encoder.
    pub variational: bool,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            feature_dim: None,
            hidden_dim: 32,
            latent_dim: 16,
            variational: true,
        }
    }
}

/// Two-layer GCN encoder with an inner-product decoder. The variational
/// form has separate mu / log sigma output heads sharing the first layer.
pub struct GraphAutoencoder {
    shared: GcnLayer,
    mu_head: GcnLayer,
    log_sigma_head: Option<GcnLayer>,
    identity_features: bool,
    latent_dim: usize,
}

/// Encoder output: latents plus the posterior statistics they came from.
pub struct Encoding {
    pub z: Tensor,
    pub mu: Tensor,
    /// Clamped to [-10, 10]; absent for a deterministic encoder.
    pub log_sigma: Option<Tensor>,
}

impl GraphAutoencoder {
    /// `n` is the node count, needed when features are identity.
    pub fn new(
        params: &mut ParamSet,
        n: usize,
        config: &AutoencoderConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<GraphAutoencoder> {
        let d_in = config.feature_dim.unwrap_or(n);
        let shared = GcnLayer::new(
            params,
            "encoder",
            d_in,
            config.hidden_dim,
            Activation::Relu,
            rng,
        )?;
        let mu_head = GcnLayer::new(
            params,
            "mu",
            config.hidden_dim,
            config.latent_dim,
            Activation::Identity,
            rng,
        )?;
        let log_sigma_head = if config.variational {
            Some(GcnLayer::new(
                params,
                "log_sigma",
                config.hidden_dim,
                config.latent_dim,
                Activation::Identity,
                rng,
            )?)
        } else {
            None
        };
        Ok(GraphAutoencoder {
            shared,
            mu_head,
            log_sigma_head,
            identity_features: config.feature_dim.is_none(),
            latent_dim: config.latent_dim,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Encode node latents. `x` must be None exactly when the model was
    /// built with identity features. With `sample`, Z = mu + sigma * noise
    /// (reparameterized); otherwise Z = mu exactly.
    pub fn encode(
        &self,
        tape: &Tape,
        x: Option<&Tensor>,
        a_hat: &Rc<CsrMatrix>,
        sample: Option<&mut ChaCha8Rng>,
    ) -> Result<Encoding> {
        let hidden = match (self.identity_features, x) {
            (true, None) => self.shared.forward_identity(tape, a_hat)?,
            (false, Some(x)) => self.shared.forward(tape, x, a_hat)?,
            (true, Some(_)) => {
                return Err(Error::Invalid(
                    "model uses identity features; pass x = None".into(),
                ))
            }
            (false, None) => {
                return Err(Error::Invalid(
                    "model expects node features; pass x = Some".into(),
                ))
            }
        };
        let mu = self.mu_head.forward(tape, &hidden, a_hat)?;
        let log_sigma = match &self.log_sigma_head {
            Some(head) => {
                let raw = head.forward(tape, &hidden, a_hat)?;
                Some(tape.clamp(&raw, -10.0, 10.0))
            }
            None => None,
        };
        let z = match (&log_sigma, sample) {
            (Some(log_sigma), Some(rng)) => {
                let noise: Vec<f64> = (0..mu.numel())
                    .map(|_| StandardNormal.sample(rng))
                    .collect();
                let noise = Tensor::new(&mu.shape(), noise)?;
                let sigma = tape.exp(log_sigma);
                tape.add(&mu, &tape.mul(&sigma, &noise)?)?
            }
            _ => mu.clone(),
        };
        Ok(Encoding { z, mu, log_sigma })
    }

    /// Edge logits <Z_i, Z_j> for the given node pairs.
    pub fn decode_edges(
        &self,
        tape: &Tape,
        z: &Tensor,
        pairs: &[(usize, usize)],
    ) -> Result<Tensor> {
        tape.pair_dot(z, pairs)
    }

    /// Reconstruction BCE over the given pair logits (clamped to [-15, 15])
    /// plus, for the variational model, KL / n against a standard normal
    /// prior. `n` is the node count of the encoded graph.
    pub fn loss(
        &self,
        tape: &Tape,
        logits: &Tensor,
        targets: &Tensor,
        encoding: &Encoding,
        n: usize,
        pos_weight: f64,
    ) -> Result<Tensor> {
        let clamped = tape.clamp(logits, -15.0, 15.0);
        let bce = tape.binary_cross_entropy_with_logits(&clamped, targets, pos_weight)?;
        match &encoding.log_sigma {
            Some(log_sigma) => {
                let kl = tape.gaussian_kl(&encoding.mu, log_sigma)?;
                tape.add(&bce, &tape.scale(&kl, 1.0 / n as f64))
            }
            None => Ok(bce),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{complete_graph, gnp_random_graph, path_graph};
    use crate::tensor::finite_difference_check;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn identity_gcn(d: usize, activation: Activation) -> GcnLayer {
        let mut params = ParamSet::new();
        let mut r = rng(0);
        let layer = GcnLayer::new(&mut params, "l", d, d, activation, &mut r).unwrap();
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        params.get("l.w").unwrap().set_values(&eye).unwrap();
        layer
    }

    fn operator(t: Transform, g: &Graph) -> Rc<CsrMatrix> {
        Rc::new(CsrMatrix::from_normalized(&build_transform_with(
            t,
            g,
            DegreeSource::Operand,
        )))
    }

    #[test]
    fn gcn_identity_operator_and_weight_is_identity() {
        let g = Graph::new(2, std::iter::empty()).unwrap();
        let layer = identity_gcn(2, Activation::Identity);
        let h = Tensor::from_rows(&[vec![1.5, -2.0], vec![0.25, 3.0]]).unwrap();
        let tape = Tape::new();
        let out = layer
            .forward(&tape, &h, &operator(Transform::FirstOrder, &g))
            .unwrap();
        assert_eq!(out.values(), h.values());
    }

    #[test]
    fn gcn_single_edge_averages_features() {
        let g = path_graph(2);
        let layer = identity_gcn(1, Activation::Identity);
        let h = Tensor::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let tape = Tape::new();
        let out = layer
            .forward(&tape, &h, &operator(Transform::FirstOrder, &g))
            .unwrap();
        assert_eq!(out.values(), vec![0.5, 0.5]);
    }

    #[test]
    fn gcn_relu_output_is_nonnegative() {
        let g = gnp_random_graph(6, 0.5, &mut rng(3));
        let mut params = ParamSet::new();
        let mut r = rng(4);
        let layer = GcnLayer::new(&mut params, "l", 3, 4, Activation::Relu, &mut r).unwrap();
        let h = Tensor::new(&[6, 3], (0..18).map(|i| (i as f64) - 9.0).collect()).unwrap();
        let tape = Tape::new();
        let out = layer
            .forward(&tape, &h, &operator(Transform::FirstOrder, &g))
            .unwrap();
        assert!(out.values().iter().all(|&v| v >= 0.0));
    }

    fn identity_gin(d: usize, learnable: bool) -> (ParamSet, GinLayer) {
        let mut params = ParamSet::new();
        let mut r = rng(0);
        let layer = GinLayer::new(&mut params, "l", d, d, d, learnable, &mut r).unwrap();
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        params.get("l.w1").unwrap().set_values(&eye).unwrap();
        params.get("l.w2").unwrap().set_values(&eye).unwrap();
        (params, layer)
    }

    #[test]
    fn gin_on_edgeless_graph_is_identity() {
        let g = Graph::new(2, std::iter::empty()).unwrap();
        let (_params, layer) = identity_gin(1, false);
        let a = Rc::new(CsrMatrix::from_binary(&adjacency(&g)));
        let h = Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let tape = Tape::new();
        let out = layer.forward(&tape, &h, &a).unwrap();
        assert_eq!(out.values(), h.values());
    }

    #[test]
    fn gin_path_counts_degree_plus_self() {
        let g = path_graph(3);
        let (_params, layer) = identity_gin(1, false);
        let a = Rc::new(CsrMatrix::from_binary(&adjacency(&g)));
        let h = Tensor::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let tape = Tape::new();
        let out = layer.forward(&tape, &h, &a).unwrap();
        assert_eq!(out.values(), vec![2.0, 3.0, 2.0]);
    }

    #[test]
    fn gin_enlarged_equals_raw_on_triangle() {
        let g = complete_graph(3);
        let (_params, layer) = identity_gin(1, false);
        let raw = Rc::new(CsrMatrix::from_binary(&adjacency(&g)));
        let enlarged = Rc::new(CsrMatrix::from_binary(&enlarge(&g)));
        let h = Tensor::from_rows(&[vec![0.5], vec![1.5], vec![-2.0]]).unwrap();
        let tape = Tape::new();
        let a = layer.forward(&tape, &h, &raw).unwrap();
        let b = layer.forward(&tape, &h, &enlarged).unwrap();
        assert_eq!(a.values(), b.values());
    }

    fn permute_graph(g: &Graph, perm: &[usize]) -> Graph {
        let edges: Vec<(usize, usize)> = g.edges().map(|(i, j)| (perm[i], perm[j])).collect();
        Graph::new(g.n(), edges).unwrap()
    }

    fn permute_rows(t: &Tensor, perm: &[usize]) -> Tensor {
        let shape = t.shape();
        let (n, p) = (shape[0], shape[1]);
        let v = t.values();
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            out[perm[i] * p..(perm[i] + 1) * p].copy_from_slice(&v[i * p..(i + 1) * p]);
        }
        Tensor::new(&shape, out).unwrap()
    }

    #[test]
    fn layers_are_permutation_equivariant() {
        for seed in 0..10u64 {
            let mut r = rng(seed);
            let g = gnp_random_graph(6, 0.4, &mut r);
            let perm = {
                let mut p: Vec<usize> = (0..6).collect();
                for i in (1..6).rev() {
                    let j = r.gen_range(0..=i);
                    p.swap(i, j);
                }
                p
            };
            let pg = permute_graph(&g, &perm);
            let h = Tensor::new(&[6, 2], (0..12).map(|i| (i as f64) * 0.3 - 1.0).collect())
                .unwrap();
            let ph = permute_rows(&h, &perm);

            let mut params = ParamSet::new();
            let mut wr = rng(seed + 100);
            let gcn = GcnLayer::new(&mut params, "g", 2, 3, Activation::Relu, &mut wr).unwrap();
            let tape = Tape::new();
            let out = gcn
                .forward(&tape, &h, &operator(Transform::Enlarged, &g))
                .unwrap();
            let pout = gcn
                .forward(&tape, &ph, &operator(Transform::Enlarged, &pg))
                .unwrap();
            for (i, row) in (0..6).map(|i| (i, perm[i])) {
                for d in 0..3 {
                    assert_relative_eq!(
                        out.values()[i * 3 + d],
                        pout.values()[row * 3 + d],
                        max_relative = 1e-12
                    );
                }
            }

            let mut params2 = ParamSet::new();
            let mut wr2 = rng(seed + 200);
            let gin = GinLayer::new(&mut params2, "i", 2, 3, 3, false, &mut wr2).unwrap();
            let a = Rc::new(CsrMatrix::from_binary(&enlarge(&g)));
            let pa = Rc::new(CsrMatrix::from_binary(&enlarge(&pg)));
            let out = gin.forward(&tape, &h, &a).unwrap();
            let pout = gin.forward(&tape, &ph, &pa).unwrap();
            for (i, row) in (0..6).map(|i| (i, perm[i])) {
                for d in 0..3 {
                    assert_relative_eq!(
                        out.values()[i * 3 + d],
                        pout.values()[row * 3 + d],
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    fn small_classifier(kind: LayerKind, readout: Readout) -> GraphClassifier {
        let mut params = ParamSet::new();
        let mut r = rng(7);
        GraphClassifier::new(
            &mut params,
            &ClassifierConfig {
                kind,
                num_layers: 2,
                feature_dim: 2,
                hidden_dim: 4,
                num_classes: 2,
                readout,
                jumping: kind == LayerKind::Gin,
                learnable_epsilon: false,
            },
            &mut r,
        )
        .unwrap()
    }

    fn with_features(g: Graph) -> Graph {
        let feats = (0..g.n())
            .map(|i| vec![1.0, (i % 2) as f64])
            .collect::<Vec<_>>();
        g.with_features(feats).unwrap()
    }

    #[test]
    fn classifier_is_permutation_invariant() {
        let g = with_features(path_graph(5));
        let permuted = {
            let perm = [2usize, 0, 4, 1, 3];
            let base = permute_graph(&path_graph(5), &perm);
            let mut feats = vec![vec![0.0; 2]; 5];
            for i in 0..5 {
                feats[perm[i]] = vec![1.0, (i % 2) as f64];
            }
            base.with_features(feats).unwrap()
        };
        for kind in [LayerKind::Gcn, LayerKind::Gin] {
            let model = small_classifier(kind, Readout::Sum);
            let a = model
                .classify_graph(&g, Transform::Enlarged, GinAggregator::Binary)
                .unwrap();
            let b = model
                .classify_graph(&permuted, Transform::Enlarged, GinAggregator::Binary)
                .unwrap();
            for (x, y) in a.values().iter().zip(b.values().iter()) {
                assert_relative_eq!(x, y, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn disconnected_duplicate_doubles_sum_readout_logits() {
        let g = with_features(path_graph(3));
        let doubled = {
            let base = Graph::new(
                6,
                [(0usize, 1usize), (1, 2), (3, 4), (4, 5)],
            )
            .unwrap();
            let feats = (0..6).map(|i| vec![1.0, (i % 3 % 2) as f64]).collect();
            base.with_features(feats).unwrap()
        };
        let mut params = ParamSet::new();
        let mut r = rng(11);
        let model = GraphClassifier::new(
            &mut params,
            &ClassifierConfig {
                kind: LayerKind::Gin,
                num_layers: 2,
                feature_dim: 2,
                hidden_dim: 4,
                num_classes: 2,
                readout: Readout::Sum,
                jumping: true,
                learnable_epsilon: false,
            },
            &mut r,
        )
        .unwrap();
        params.get("head.b").unwrap().set_values(&[0.0, 0.0]).unwrap();
        let single = model
            .classify_graph(&g, Transform::FirstOrder, GinAggregator::Binary)
            .unwrap();
        let double = model
            .classify_graph(&doubled, Transform::FirstOrder, GinAggregator::Binary)
            .unwrap();
        for (s, d) in single.values().iter().zip(double.values().iter()) {
            assert_relative_eq!(2.0 * s, d, max_relative = 1e-10);
        }
    }

    #[test]
    fn transforms_coincide_on_complete_graph() {
        let g = with_features(complete_graph(3));
        let model = small_classifier(LayerKind::Gcn, Readout::Mean);
        let a = model
            .classify_graph(&g, Transform::FirstOrder, GinAggregator::Binary)
            .unwrap();
        let b = model
            .classify_graph(&g, Transform::Enlarged, GinAggregator::Binary)
            .unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn feature_dim_mismatch_is_reported() {
        let g = path_graph(3)
            .with_features(vec![vec![1.0]; 3])
            .unwrap();
        let model = small_classifier(LayerKind::Gcn, Readout::Mean);
        assert!(model
            .classify_graph(&g, Transform::FirstOrder, GinAggregator::Binary)
            .is_err());
    }

    #[test]
    fn autoencoder_eval_returns_mu_exactly() {
        let g = gnp_random_graph(8, 0.4, &mut rng(5));
        let mut params = ParamSet::new();
        let mut r = rng(6);
        let model =
            GraphAutoencoder::new(&mut params, 8, &AutoencoderConfig::default(), &mut r).unwrap();
        let a = operator(Transform::FirstOrder, &g);
        let tape = Tape::new();
        let enc = model.encode(&tape, None, &a, None).unwrap();
        assert_eq!(enc.z.values(), enc.mu.values());
        assert_eq!(enc.z.shape(), vec![8, 16]);
    }

    #[test]
    fn autoencoder_sampling_with_tiny_sigma_stays_near_mu() {
        let g = gnp_random_graph(6, 0.5, &mut rng(8));
        let mut params = ParamSet::new();
        let mut r = rng(9);
        let model =
            GraphAutoencoder::new(&mut params, 6, &AutoencoderConfig::default(), &mut r).unwrap();
        // force the log-sigma head far negative so it clamps at -10
        let w = params.get("log_sigma.w").unwrap();
        w.set_values(&vec![-1e6; w.numel()]).unwrap();
        let a = operator(Transform::FirstOrder, &g);
        let tape = Tape::new();
        let mut noise_rng = rng(10);
        let enc = model.encode(&tape, None, &a, Some(&mut noise_rng)).unwrap();
        let sigma = (-10.0f64).exp();
        for (z, m) in enc.z.values().iter().zip(enc.mu.values().iter()) {
            assert!((z - m).abs() < 10.0 * sigma);
        }
        assert!(enc
            .log_sigma
            .as_ref()
            .unwrap()
            .values()
            .iter()
            .all(|&v| v >= -10.0));
    }

    #[test]
    fn decoder_is_symmetric_and_matches_brute_force() {
        let mut r = rng(12);
        let z_values: Vec<f64> = (0..20).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
        let z = Tensor::new(&[5, 4], z_values.clone()).unwrap();
        let mut params = ParamSet::new();
        let model = GraphAutoencoder::new(
            &mut params,
            5,
            &AutoencoderConfig {
                latent_dim: 4,
                ..AutoencoderConfig::default()
            },
            &mut rng(13),
        )
        .unwrap();
        let tape = Tape::new();
        let pairs = [(0usize, 3usize), (3, 0), (1, 4), (2, 2)];
        let logits = model.decode_edges(&tape, &z, &pairs).unwrap();
        let v = logits.values();
        assert_eq!(v[0], v[1]);
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            let expected: f64 = (0..4).map(|d| z_values[i * 4 + d] * z_values[j * 4 + d]).sum();
            assert_eq!(v[idx], expected);
        }
    }

    #[test]
    fn vgae_loss_is_near_zero_for_perfect_confident_logits() {
        let mut params = ParamSet::new();
        let model = GraphAutoencoder::new(
            &mut params,
            4,
            &AutoencoderConfig::default(),
            &mut rng(14),
        )
        .unwrap();
        let tape = Tape::new();
        let mu = Tensor::new(&[4, 16], vec![0.0; 64]).unwrap();
        let log_sigma = Tensor::new(&[4, 16], vec![0.0; 64]).unwrap();
        let encoding = Encoding {
            z: mu.clone(),
            mu,
            log_sigma: Some(log_sigma),
        };
        let logits = Tensor::new(&[4], vec![100.0, 100.0, -100.0, -100.0]).unwrap();
        let targets = Tensor::new(&[4], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let loss = model
            .loss(&tape, &logits, &targets, &encoding, 4, 1.0)
            .unwrap();
        assert!(loss.value() < 1e-6, "loss {}", loss.value());
    }

    #[test]
    fn gcn_layer_composite_passes_gradient_check() {
        let g = gnp_random_graph(5, 0.5, &mut rng(20));
        let a = operator(Transform::Enlarged, &g);
        let x = Tensor::new(&[5, 2], (0..10).map(|i| 0.37 * (i as f64) - 1.6).collect())
            .unwrap();
        let w0 = Tensor::new(&[2, 3], (0..6).map(|i| 0.21 * (i as f64) - 0.5).collect())
            .unwrap();
        let err = finite_difference_check(
            |tape, w| {
                let projected = tape.matmul(&x, w).unwrap();
                let mixed = tape.spmm(&a, &projected).unwrap();
                let activated = tape.relu(&mixed);
                tape.softmax_cross_entropy(&activated, &[0, 1, 2, 0, 1]).unwrap()
            },
            &w0,
            1e-4,
        );
        assert!(err < 1e-4, "relative error {err}");
    }
}
