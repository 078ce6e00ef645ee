//! The `run` verb: execute the experiment described by a config file and
//! write CSV + JSON reports.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use twohop::harness::{
    run_graph_classification, run_link_prediction, run_missing_edges, train_graph_classifier,
    GraphClassifierSpec, MissingEdgeSpec, RunReport,
};
use twohop::mi::{neighborhood_mi_probe, probe_csv, ProbeConfig, ProbeMode};
use twohop::transforms::Transform;

use crate::compare::{comparison_csv, comparison_table};
use crate::config::{parse_config_text, ExperimentConfig, Task, TaskPlan};
use crate::datasets::{dataset_label, graph_dataset, lp_graph, node_graph};

pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub single_thread: bool,
    pub out_dir: PathBuf,
}

/// File-name-friendly transform tag (`^` and `+` confuse shell globs).
fn transform_slug(t: Transform) -> &'static str {
    match t {
        Transform::FirstOrder => "a1",
        Transform::Enlarged => "a1-a2",
        Transform::SquaredWalks => "a2",
        Transform::SquaredWalksTwoLoop => "a2-2i",
    }
}

fn announce(report: &RunReport, csv: &Path, json: &Path) {
    println!("{}", report.summary());
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
}

pub fn cmd_run(opts: &RunOptions) -> Result<()> {
    let text = fs::read_to_string(&opts.config)
        .with_context(|| format!("reading config {}", opts.config.display()))?;
    let raw = parse_config_text(&text, &opts.config)?;
    let mut cfg = ExperimentConfig::resolve(raw, opts.seed)?;
    cfg.settings.single_thread = opts.single_thread;
    let plan = cfg.plan.clone();
    match plan {
        TaskPlan::GraphClassification { spec, feature_cap } => {
            run_classification(&cfg, &spec, feature_cap, &opts.out_dir)
        }
        TaskPlan::TransformAblation {
            spec,
            transforms,
            feature_cap,
        } => run_ablation(&cfg, &spec, &transforms, feature_cap, &opts.out_dir),
        TaskPlan::LinkPrediction { spec } => {
            let label = dataset_label(&cfg.dataset);
            let started = Instant::now();
            let g = lp_graph(&cfg)?;
            let rows = run_link_prediction(&g, &spec, cfg.folds, cfg.seed, &cfg.settings)?;
            let report = RunReport::new(
                cfg.task.id(),
                &label,
                vec!["auc".to_string(), "ap".to_string()],
                rows,
                cfg.resolved.clone(),
                started.elapsed().as_secs_f64(),
            )?;
            let stem = format!(
                "{}-{label}-{}-{}",
                cfg.task.id(),
                cfg.model.id(),
                transform_slug(spec.transform)
            );
            let (csv, json) = report.write(&opts.out_dir, &stem)?;
            announce(&report, &csv, &json);
            Ok(())
        }
        TaskPlan::MissingEdges { spec, keeps } => {
            run_missing_edge_sweep(&cfg, &spec, &keeps, &opts.out_dir)
        }
        TaskPlan::MiProbe {
            spec,
            probe,
            modes,
            feature_cap,
        } => run_probe(&cfg, &spec, &probe, &modes, feature_cap, &opts.out_dir),
    }
}

fn run_classification(
    cfg: &ExperimentConfig,
    spec: &GraphClassifierSpec,
    feature_cap: usize,
    out_dir: &Path,
) -> Result<()> {
    let label = dataset_label(&cfg.dataset);
    let started = Instant::now();
    let dataset = graph_dataset(cfg, feature_cap)?;
    let rows = run_graph_classification(&dataset, spec, cfg.folds, cfg.seed, &cfg.settings)?;
    let report = RunReport::new(
        cfg.task.id(),
        &label,
        vec!["accuracy".to_string()],
        rows,
        cfg.resolved.clone(),
        started.elapsed().as_secs_f64(),
    )?;
    let stem = format!(
        "{}-{label}-{}-{}",
        cfg.task.id(),
        cfg.model.id(),
        transform_slug(spec.transform)
    );
    let (csv, json) = report.write(out_dir, &stem)?;
    announce(&report, &csv, &json);
    Ok(())
}

fn run_ablation(
    cfg: &ExperimentConfig,
    spec: &GraphClassifierSpec,
    transforms: &[Transform],
    feature_cap: usize,
    out_dir: &Path,
) -> Result<()> {
    let label = dataset_label(&cfg.dataset);
    let dataset = graph_dataset(cfg, feature_cap)?;
    let mut labeled: Vec<(String, RunReport)> = Vec::new();
    for &t in transforms {
        let mut tspec = spec.clone();
        tspec.transform = t;
        let started = Instant::now();
        let rows = run_graph_classification(&dataset, &tspec, cfg.folds, cfg.seed, &cfg.settings)?;
        // each ablation row is an ordinary graph-classification run; its
        // embedded config reproduces it standalone
        let mut config = cfg.resolved.clone();
        config.insert("task".to_string(), Task::GraphClassification.id().to_string());
        config.insert("transform".to_string(), t.id().to_string());
        config.remove("transforms");
        let report = RunReport::new(
            Task::GraphClassification.id(),
            &label,
            vec!["accuracy".to_string()],
            rows,
            config,
            started.elapsed().as_secs_f64(),
        )?;
        let stem = format!(
            "{}-{label}-{}-{}",
            cfg.task.id(),
            cfg.model.id(),
            transform_slug(t)
        );
        let (csv, json) = report.write(out_dir, &stem)?;
        announce(&report, &csv, &json);
        labeled.push((transform_slug(t).to_string(), report));
    }
    print!("{}", comparison_table(&labeled)?);
    let compare_path = out_dir.join(format!(
        "{}-{label}-{}-compare.csv",
        cfg.task.id(),
        cfg.model.id()
    ));
    fs::write(&compare_path, comparison_csv(&labeled)?)
        .with_context(|| format!("writing {}", compare_path.display()))?;
    println!("wrote {}", compare_path.display());
    Ok(())
}

fn run_missing_edge_sweep(
    cfg: &ExperimentConfig,
    spec: &MissingEdgeSpec,
    keeps: &[f64],
    out_dir: &Path,
) -> Result<()> {
    let label = dataset_label(&cfg.dataset);
    let g = node_graph(cfg)?;

    let mut stems = HashSet::new();
    for &keep in keeps {
        let pct = (keep * 100.0).round() as u32;
        if !stems.insert(pct) {
            bail!("keep fractions collide at {pct}% in file naming; use distinct percent values");
        }
    }

    let mut summary = String::from("keep,accuracy_mean,accuracy_std\n");
    let mut table_rows = vec![("keep".to_string(), "accuracy".to_string())];
    for &keep in keeps {
        let mut kspec = spec.clone();
        kspec.keep_fraction = keep;
        let started = Instant::now();
        let rows = run_missing_edges(&g, &kspec, cfg.folds, cfg.seed, &cfg.settings)?;
        let mut config = cfg.resolved.clone();
        config.insert("keep".to_string(), keep.to_string());
        let report = RunReport::new(
            cfg.task.id(),
            &label,
            vec!["accuracy".to_string()],
            rows,
            config,
            started.elapsed().as_secs_f64(),
        )?;
        let pct = (keep * 100.0).round() as u32;
        let stem = format!(
            "{}-{label}-{}-{}-keep{pct}",
            cfg.task.id(),
            cfg.model.id(),
            transform_slug(spec.transform)
        );
        let (csv, json) = report.write(out_dir, &stem)?;
        announce(&report, &csv, &json);
        let _ = writeln!(summary, "{keep},{},{}", report.mean(0), report.std(0));
        table_rows.push((
            format!("{pct}%"),
            format!("{:.4} +/- {:.4}", report.mean(0), report.std(0)),
        ));
    }

    let summary_path = out_dir.join(format!(
        "{}-{label}-{}-{}-summary.csv",
        cfg.task.id(),
        cfg.model.id(),
        transform_slug(spec.transform)
    ));
    fs::write(&summary_path, summary)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    let width = table_rows.iter().map(|(k, _)| k.len()).max().unwrap_or(4);
    for (k, v) in &table_rows {
        println!("{k:<width$}  {v}");
    }
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn run_probe(
    cfg: &ExperimentConfig,
    spec: &GraphClassifierSpec,
    probe: &ProbeConfig,
    modes: &[ProbeMode],
    feature_cap: usize,
    out_dir: &Path,
) -> Result<()> {
    let label = dataset_label(&cfg.dataset);
    let dataset = graph_dataset(cfg, feature_cap)?;
    let trained = train_graph_classifier(&dataset, spec, cfg.seed, &cfg.settings)?;
    let mut reports = Vec::new();
    for &mode in modes {
        reports.extend(neighborhood_mi_probe(&dataset, &trained, mode, probe)?);
    }
    let csv = probe_csv(&reports);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join(format!(
        "{}-{label}-{}-{}.csv",
        cfg.task.id(),
        cfg.model.id(),
        transform_slug(spec.transform)
    ));
    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
    print!("{csv}");
    println!("wrote {}", path.display());
    Ok(())
}
