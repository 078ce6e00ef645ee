//! Flat key=value experiment configuration.
//!
//! The format is deliberately rigid: one `key = value` per line, `#`
//! starts a full-line comment, and every key must be known to the chosen
//! task — silent typos in a benchmark config corrupt result claims, so
//! unknown or inapplicable keys are hard errors. The full key reference
//! lives in the repository README.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use twohop::harness::{GraphClassifierSpec, LinkPredictionSpec, MissingEdgeSpec, TrainSettings};
use twohop::mi::{ProbeConfig, ProbeMode};
use twohop::transforms::Transform;

/// Experiment families the `run` verb can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    GraphClassification,
    LinkPrediction,
    MissingEdges,
    TransformAblation,
    MiProbe,
}

impl Task {
    pub fn id(self) -> &'static str {
        match self {
            Task::GraphClassification => "graph-classification",
            Task::LinkPrediction => "link-prediction",
            Task::MissingEdges => "missing-edges",
            Task::TransformAblation => "transform-ablation",
            Task::MiProbe => "mi-probe",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Task {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph-classification" => Ok(Task::GraphClassification),
            "link-prediction" => Ok(Task::LinkPrediction),
            "missing-edges" => Ok(Task::MissingEdges),
            "transform-ablation" => Ok(Task::TransformAblation),
            "mi-probe" => Ok(Task::MiProbe),
            other => bail!(
                "unknown task {other:?}, valid tasks: graph-classification, \
                 link-prediction, missing-edges, transform-ablation, mi-probe"
            ),
        }
    }
}

/// Model families selectable in a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Gcn,
    Gin0,
    GinEps,
    Vgae,
    Gae,
}

impl Model {
    pub fn id(self) -> &'static str {
        match self {
            Model::Gcn => "gcn",
            Model::Gin0 => "gin-0",
            Model::GinEps => "gin-eps",
            Model::Vgae => "vgae",
            Model::Gae => "gae",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Model {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Model::Gcn),
            "gin-0" => Ok(Model::Gin0),
            "gin-eps" => Ok(Model::GinEps),
            "vgae" => Ok(Model::Vgae),
            "gae" => Ok(Model::Gae),
            other => bail!("unknown model {other:?}, valid models: gcn, gin-0, gin-eps, vgae, gae"),
        }
    }
}

/// Parameters for the parametric synthetic datasets (`two-block`,
/// `sbm-nodes`); unused for named fixed datasets and on-disk data.
#[derive(Debug, Clone, Copy)]
pub struct DatasetParams {
    pub nodes: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_noise: f64,
    pub feature_dim: usize,
}

/// Task-specific portion of a resolved configuration.
#[derive(Debug, Clone)]
pub enum TaskPlan {
    GraphClassification {
        spec: GraphClassifierSpec,
        feature_cap: usize,
    },
    TransformAblation {
        spec: GraphClassifierSpec,
        transforms: Vec<Transform>,
        feature_cap: usize,
    },
    LinkPrediction {
        spec: LinkPredictionSpec,
    },
    MissingEdges {
        spec: MissingEdgeSpec,
        keeps: Vec<f64>,
    },
    MiProbe {
        spec: GraphClassifierSpec,
        probe: ProbeConfig,
        modes: Vec<ProbeMode>,
        feature_cap: usize,
    },
}

/// A fully resolved experiment: every effective key explicit, ready to
/// fingerprint and execute.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub task: Task,
    pub dataset: String,
    pub dataset_params: DatasetParams,
    pub seed: u64,
    pub folds: usize,
    pub model: Model,
    /// `single_thread` is filled from the CLI flag at run time; it is an
    /// execution mode, not part of the experiment's identity.
    pub settings: TrainSettings,
    pub plan: TaskPlan,
    /// Canonical `key -> value` map of everything above; hashing it
    /// yields the report fingerprint.
    pub resolved: BTreeMap<String, String>,
}

/// Parse the raw text of a config file into a key-value map. Duplicate
/// keys and malformed lines are errors naming the offending line.
pub fn parse_config_text(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            anyhow!(
                "{}:{lineno}: expected `key = value`, got {line:?}",
                path.display()
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            bail!("{}:{lineno}: empty key", path.display());
        }
        if value.is_empty() {
            bail!("{}:{lineno}: key `{key}` has an empty value", path.display());
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            bail!("{}:{lineno}: duplicate key `{key}`", path.display());
        }
    }
    Ok(map)
}

/// Consumes keys out of the raw map, records their effective values, and
/// reports anything left over as unknown.
struct Reader {
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Reader {
    fn new(raw: BTreeMap<String, String>) -> Self {
        Reader {
            raw,
            resolved: BTreeMap::new(),
        }
    }

    fn record(&mut self, key: &str, value: String) -> String {
        self.resolved.insert(key.to_string(), value.clone());
        value
    }

    fn require(&mut self, key: &str) -> Result<String> {
        let value = self
            .raw
            .remove(key)
            .ok_or_else(|| anyhow!("missing required config key `{key}`"))?;
        Ok(self.record(key, value))
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        let value = self.raw.remove(key).unwrap_or_else(|| default.to_string());
        self.record(key, value)
    }

    fn parse<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        match self.raw.remove(key) {
            Some(text) => {
                let value: T = text
                    .parse()
                    .map_err(|e| anyhow!("config key `{key}`: invalid value {text:?}: {e}"))?;
                self.record(key, text);
                Ok(value)
            }
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    fn parse_required<T>(&mut self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let text = self.require(key)?;
        text.parse()
            .map_err(|e| anyhow!("config key `{key}`: invalid value {text:?}: {e}"))
    }

    fn parse_list<T>(&mut self, key: &str, default: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let text = self.str_or(key, default);
        let items: Vec<T> = text
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|e| {
                    anyhow!("config key `{key}`: invalid list item {item:?}: {e}")
                })
            })
            .collect::<Result<_>>()?;
        if items.is_empty() {
            bail!("config key `{key}` must list at least one value");
        }
        Ok(items)
    }

    fn finish(self, task: Task) -> Result<BTreeMap<String, String>> {
        if !self.raw.is_empty() {
            let keys: Vec<&str> = self.raw.keys().map(String::as_str).collect();
            bail!(
                "config keys not recognized for task {task}: {}",
                keys.join(", ")
            );
        }
        Ok(self.resolved)
    }
}

/// Datasets that take generation parameters from the config.
fn dataset_params(reader: &mut Reader, dataset: &str) -> Result<DatasetParams> {
    match dataset {
        "two-block" => {
            let nodes = reader.parse("nodes", 200usize)?;
            let p_in = reader.parse("p_in", 0.8f64)?;
            let p_out = reader.parse("p_out", 0.002f64)?;
            Ok(DatasetParams {
                nodes,
                classes: 2,
                p_in,
                p_out,
                feature_noise: 0.0,
                feature_dim: 0,
            })
        }
        "sbm-nodes" => {
            let nodes = reader.parse("nodes", 400usize)?;
            let classes = reader.parse("classes", 4usize)?;
            let p_in = reader.parse("p_in", 0.1f64)?;
            let p_out = reader.parse("p_out", 0.005f64)?;
            let feature_noise = reader.parse("feature_noise", 1.0f64)?;
            let feature_dim = reader.parse("feature_dim", classes)?;
            if classes < 2 {
                bail!("config key `classes`: need at least 2, got {classes}");
            }
            if feature_dim < classes {
                bail!(
                    "config key `feature_dim`: must be >= classes ({classes}), got {feature_dim}"
                );
            }
            Ok(DatasetParams {
                nodes,
                classes,
                p_in,
                p_out,
                feature_noise,
                feature_dim,
            })
        }
        _ => Ok(DatasetParams {
            nodes: 0,
            classes: 0,
            p_in: 0.0,
            p_out: 0.0,
            feature_noise: 0.0,
            feature_dim: 0,
        }),
    }
}

/// Classifier spec from the model choice plus overridable keys.
fn classifier_spec(reader: &mut Reader, model: Model) -> Result<GraphClassifierSpec> {
    let mut spec = match model {
        Model::Gcn => GraphClassifierSpec::gcn_default(),
        Model::Gin0 => GraphClassifierSpec::gin_default(),
        Model::GinEps => {
            let mut s = GraphClassifierSpec::gin_default();
            s.learnable_epsilon = true;
            s
        }
        other => bail!("model {other} is only valid for link-prediction"),
    };
    spec.transform = reader.parse("transform", spec.transform)?;
    spec.hidden_dim = reader.parse("hidden_dim", spec.hidden_dim)?;
    spec.num_layers = reader.parse("num_layers", spec.num_layers)?;
    spec.readout = reader.parse("readout", spec.readout)?;
    spec.jumping = reader.parse("jumping", spec.jumping)?;
    spec.aggregator = reader.parse("aggregator", spec.aggregator)?;
    spec.degree_source = reader.parse("degree_source", spec.degree_source)?;
    Ok(spec)
}

fn train_settings(reader: &mut Reader, base: TrainSettings) -> Result<TrainSettings> {
    Ok(TrainSettings {
        epochs: reader.parse("epochs", base.epochs)?,
        learning_rate: reader.parse("learning_rate", base.learning_rate)?,
        weight_decay: reader.parse("weight_decay", base.weight_decay)?,
        dropout: reader.parse("dropout", base.dropout)?,
        patience: reader.parse("patience", base.patience)?,
        selection: reader.parse("selection", base.selection)?,
        single_thread: false,
    })
}

impl ExperimentConfig {
    /// Fill every default, apply the seed override, and reject anything
    /// the chosen task does not understand.
    pub fn resolve(raw: BTreeMap<String, String>, seed_override: Option<u64>) -> Result<Self> {
        let mut reader = Reader::new(raw);
        let task: Task = reader.parse_required("task")?;
        let dataset = reader.require("dataset")?;
        let seed = match seed_override {
            Some(seed) => {
                reader.raw.remove("seed");
                reader.record("seed", seed.to_string());
                seed
            }
            None => reader.parse("seed", 0u64)?,
        };
        let params = dataset_params(&mut reader, &dataset)?;

        let (model, folds, settings, plan) = match task {
            Task::GraphClassification => {
                let model: Model = reader.parse_required("model")?;
                let folds = reader.parse("folds", 10usize)?;
                let settings = train_settings(&mut reader, TrainSettings::graph_classification())?;
                let spec = classifier_spec(&mut reader, model)?;
                let feature_cap = reader.parse("feature_cap", 64usize)?;
                (
                    model,
                    folds,
                    settings,
                    TaskPlan::GraphClassification { spec, feature_cap },
                )
            }
            Task::TransformAblation => {
                let model: Model = reader.parse_required("model")?;
                let folds = reader.parse("folds", 10usize)?;
                let settings = train_settings(&mut reader, TrainSettings::graph_classification())?;
                if reader.raw.contains_key("transform") {
                    bail!(
                        "transform-ablation takes the `transforms` list, not a single `transform`"
                    );
                }
                let mut spec = classifier_spec(&mut reader, model)?;
                // classifier_spec records a default `transform`; the
                // ablation list is the authoritative key here
                reader.resolved.remove("transform");
                spec.transform = Transform::FirstOrder;
                let transforms: Vec<Transform> = reader.parse_list("transforms", "a1,a1+a2")?;
                let feature_cap = reader.parse("feature_cap", 64usize)?;
                (
                    model,
                    folds,
                    settings,
                    TaskPlan::TransformAblation {
                        spec,
                        transforms,
                        feature_cap,
                    },
                )
            }
            Task::LinkPrediction => {
                let model: Model = reader.parse_required("model")?;
                let variational = match model {
                    Model::Vgae => true,
                    Model::Gae => false,
                    other => bail!("model {other} is not a link-prediction model; use vgae or gae"),
                };
                let folds = reader.parse("folds", 10usize)?;
                let settings = train_settings(&mut reader, TrainSettings::link_prediction())?;
                let defaults = LinkPredictionSpec::default();
                let spec = LinkPredictionSpec {
                    transform: reader.parse("transform", defaults.transform)?,
                    hidden_dim: reader.parse("hidden_dim", defaults.hidden_dim)?,
                    latent_dim: reader.parse("latent_dim", defaults.latent_dim)?,
                    variational,
                    use_features: reader.parse("use_features", defaults.use_features)?,
                    val_fraction: reader.parse("val_fraction", defaults.val_fraction)?,
                    test_fraction: reader.parse("test_fraction", defaults.test_fraction)?,
                };
                (model, folds, settings, TaskPlan::LinkPrediction { spec })
            }
            Task::MissingEdges => {
                let model: Model = reader
                    .str_or("model", "gcn")
                    .parse()
                    .map_err(|e| anyhow!("config key `model`: {e}"))?;
                if model != Model::Gcn {
                    bail!("missing-edges runs a GCN node classifier; model must be gcn");
                }
                let folds = reader.parse("folds", 10usize)?;
                let settings = train_settings(&mut reader, TrainSettings::node_classification())?;
                let defaults = MissingEdgeSpec::default();
                let spec = MissingEdgeSpec {
                    transform: reader.parse("transform", defaults.transform)?,
                    hidden_dim: reader.parse("hidden_dim", defaults.hidden_dim)?,
                    num_layers: reader.parse("num_layers", defaults.num_layers)?,
                    keep_fraction: 1.0,
                };
                let keeps: Vec<f64> = reader.parse_list("keep", "0.25,0.5,0.75,1.0")?;
                for &keep in &keeps {
                    if !(keep > 0.0 && keep <= 1.0) {
                        bail!("config key `keep`: fractions must lie in (0, 1], got {keep}");
                    }
                }
                (model, folds, settings, TaskPlan::MissingEdges { spec, keeps })
            }
            Task::MiProbe => {
                let model: Model = reader.parse_required("model")?;
                let mut base = TrainSettings::graph_classification();
                base.epochs = 100;
                let settings = TrainSettings {
                    epochs: reader.parse("epochs", base.epochs)?,
                    learning_rate: reader.parse("learning_rate", base.learning_rate)?,
                    weight_decay: reader.parse("weight_decay", base.weight_decay)?,
                    dropout: reader.parse("dropout", base.dropout)?,
                    patience: base.patience,
                    selection: base.selection,
                    single_thread: false,
                };
                let spec = classifier_spec(&mut reader, model)?;
                let feature_cap = reader.parse("feature_cap", 64usize)?;
                let bins = reader.parse("bins", 8usize)?;
                let max_coordinates = reader.parse("max_coordinates", 8usize)?;
                let modes: Vec<ProbeMode> = reader.parse_list("modes", "d1,d1d2")?;
                let probe = ProbeConfig {
                    transform: spec.transform,
                    aggregator: spec.aggregator,
                    bins,
                    max_coordinates,
                    seed,
                };
                (
                    model,
                    1,
                    settings,
                    TaskPlan::MiProbe {
                        spec,
                        probe,
                        modes,
                        feature_cap,
                    },
                )
            }
        };

        let resolved = reader.finish(task)?;
        Ok(ExperimentConfig {
            task,
            dataset,
            dataset_params: params,
            seed,
            folds,
            model,
            settings,
            plan,
            resolved,
        })
    }
}
