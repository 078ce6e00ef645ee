//! Maps the `dataset` config value onto loaded or generated data.
//!
//! Built-in names cover the seeded synthetic generators; anything else
//! is treated as a filesystem path — a directory holding a multi-file
//! benchmark dataset (named `<DIR>/<NAME>_A.txt` etc., where NAME is the
//! directory's basename) or a single edge-list file for link prediction.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twohop::graph::{load_edge_list, load_tu_dataset, Dataset, Graph};
use twohop::harness::ensure_node_features;
use twohop::synth::{
    motif_molecule_dataset, proteins_like_dataset, sbm_node_graph, triangle_dataset,
    two_block_graph,
};

use crate::config::ExperimentConfig;

/// Short display name for reports: built-in names pass through, paths
/// reduce to their basename.
pub fn dataset_label(dataset: &str) -> String {
    match Path::new(dataset).file_name() {
        Some(name) if dataset.contains(std::path::MAIN_SEPARATOR) => {
            name.to_string_lossy().into_owned()
        }
        _ => dataset.to_string(),
    }
}

/// Multi-graph dataset for graph classification, transform ablation, and
/// the MI probe. Graphs without node features get degree one-hots.
pub fn graph_dataset(cfg: &ExperimentConfig, feature_cap: usize) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dataset = match cfg.dataset.as_str() {
        "triangles" => triangle_dataset(),
        "motif-molecules" => motif_molecule_dataset(&mut rng),
        "protein-chains" => proteins_like_dataset(&mut rng),
        "two-block" | "sbm-nodes" => bail!(
            "dataset `{}` is a single graph; {} needs a multi-graph dataset \
             (triangles, motif-molecules, protein-chains, or a dataset directory)",
            cfg.dataset,
            cfg.task
        ),
        path => {
            let dir = Path::new(path);
            if !dir.is_dir() {
                bail!(
                    "unknown dataset {path:?}: not a built-in name (triangles, \
                     motif-molecules, protein-chains) and not a dataset directory"
                );
            }
            let name = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .with_context(|| format!("dataset directory {path:?} has no basename"))?;
            load_tu_dataset(dir, &name)?
        }
    };
    Ok(ensure_node_features(&dataset, feature_cap)?)
}

/// Single graph with node labels and features for the missing-edges task.
pub fn node_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match cfg.dataset.as_str() {
        "sbm-nodes" => {
            let p = &cfg.dataset_params;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok(sbm_node_graph(
                p.nodes,
                p.classes,
                p.p_in,
                p.p_out,
                p.feature_dim,
                p.feature_noise,
                &mut rng,
            ))
        }
        other => bail!(
            "dataset {other:?} does not provide node labels; missing-edges supports sbm-nodes"
        ),
    }
}

/// Single graph for link prediction: the two-block generator or an
/// edge-list file.
pub fn lp_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match cfg.dataset.as_str() {
        "two-block" => {
            let p = &cfg.dataset_params;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok(two_block_graph(p.nodes, p.p_in, p.p_out, &mut rng))
        }
        path => {
            let file = Path::new(path);
            if !file.is_file() {
                bail!(
                    "unknown dataset {path:?}: link-prediction supports two-block \
                     or a path to an edge-list file"
                );
            }
            Ok(load_edge_list(file)?)
        }
    }
}
