//! Run reports: per-fold metric values plus the resolved configuration
//! that produced them.
//!
//! Two renderings are written per run. The CSV holds one row per fold
//! followed by `mean` and `std` rows and contains nothing
//! machine-dependent, so two runs with the same seed produce identical
//! bytes. The JSON adds the resolved configuration, its fingerprint, and
//! the wall-clock duration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Outcome of one experiment: fold-by-fold metric values and the exact
/// configuration that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Task identifier, e.g. `graph-classification`.
    pub task: String,
    /// Dataset identifier the run was evaluated on.
    pub dataset: String,
    /// Metric names, one per column of `folds`.
    pub metrics: Vec<String>,
    /// One row per fold (or per repetition), one value per metric.
    pub folds: Vec<Vec<f64>>,
    /// Resolved configuration, every key explicit.
    pub config: BTreeMap<String, String>,
    /// SHA-256 of the canonical `key=value` rendering of `config`.
    pub fingerprint: String,
    /// Total run duration. Excluded from the CSV and the fingerprint.
    pub wall_clock_seconds: f64,
}

/// Canonical configuration text: sorted `key=value` lines. The
/// fingerprint hashes this rendering, so key order in the source file
/// cannot change it.
pub fn config_fingerprint(config: &BTreeMap<String, String>) -> String {
    let mut text = String::new();
    for (key, value) in config {
        let _ = writeln!(text, "{key}={value}");
    }
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

impl RunReport {
    pub fn new(
        task: &str,
        dataset: &str,
        metrics: Vec<String>,
        folds: Vec<Vec<f64>>,
        config: BTreeMap<String, String>,
        wall_clock_seconds: f64,
    ) -> Result<Self> {
        for (i, row) in folds.iter().enumerate() {
            if row.len() != metrics.len() {
                return Err(Error::Dimension(format!(
                    "fold {} has {} values for {} metrics",
                    i,
                    row.len(),
                    metrics.len()
                )));
            }
        }
        let fingerprint = config_fingerprint(&config);
        Ok(RunReport {
            task: task.to_string(),
            dataset: dataset.to_string(),
            metrics,
            folds,
            config,
            fingerprint,
            wall_clock_seconds,
        })
    }

    /// Mean of one metric column across folds.
    pub fn mean(&self, metric: usize) -> f64 {
        let sum: f64 = self.folds.iter().map(|row| row[metric]).sum();
        sum / self.folds.len() as f64
    }

    /// Sample standard deviation (n - 1) of one metric column; zero for a
    /// single fold.
    pub fn std(&self, metric: usize) -> f64 {
        let n = self.folds.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean(metric);
        let ss: f64 = self
            .folds
            .iter()
            .map(|row| {
                let d = row[metric] - mean;
                d * d
            })
            .sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// CSV rendering: a header, one row per fold, then `mean` and `std`
    /// rows. Deliberately contains no timing information.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row");
        for metric in &self.metrics {
            let _ = write!(out, ",{metric}");
        }
        out.push('\n');
        for (i, row) in self.folds.iter().enumerate() {
            let _ = write!(out, "fold{i}");
            for value in row {
                let _ = write!(out, ",{value}");
            }
            out.push('\n');
        }
        out.push_str("mean");
        for m in 0..self.metrics.len() {
            let _ = write!(out, ",{}", self.mean(m));
        }
        out.push('\n');
        out.push_str("std");
        for m in 0..self.metrics.len() {
            let _ = write!(out, ",{}", self.std(m));
        }
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("report serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("run report deserialization failed: {e}")))?;
        for (i, row) in report.folds.iter().enumerate() {
            if row.len() != report.metrics.len() {
                return Err(Error::Invalid(format!(
                    "run report fold {} has {} values for {} metrics",
                    i,
                    row.len(),
                    report.metrics.len()
                )));
            }
        }
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Write `<stem>.csv` and `<stem>.json` under `dir`, creating the
    /// directory if needed. Returns the two paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
        fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }

    /// One-line console summary: mean and std per metric.
    pub fn summary(&self) -> String {
        let mut out = format!("{} on {}:", self.task, self.dataset);
        for (m, name) in self.metrics.iter().enumerate() {
            let _ = write!(out, " {name} {:.4} +/- {:.4}", self.mean(m), self.std(m));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> BTreeMap<String, String> {
        let mut config = BTreeMap::new();
        config.insert("task".into(), "graph-classification".into());
        config.insert("dataset".into(), "demo".into());
        config.insert("seed".into(), "7".into());
        config
    }

    fn sample_report() -> RunReport {
        RunReport::new(
            "graph-classification",
            "demo",
            vec!["accuracy".into()],
            vec![vec![0.5], vec![0.75], vec![1.0]],
            sample_config(),
            12.5,
        )
        .unwrap()
    }

    #[test]
    fn mean_and_sample_std() {
        let report = sample_report();
        assert_eq!(report.mean(0), 0.75);
        // sample variance of {0.5, 0.75, 1.0} is 0.0625
        assert_eq!(report.std(0), 0.25);
    }

    #[test]
    fn std_of_single_fold_is_zero() {
        let report = RunReport::new(
            "t",
            "d",
            vec!["auc".into()],
            vec![vec![0.9]],
            BTreeMap::new(),
            1.0,
        )
        .unwrap();
        assert_eq!(report.std(0), 0.0);
    }

    #[test]
    fn csv_layout_and_content() {
        let report = sample_report();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines,
            vec![
                "row,accuracy",
                "fold0,0.5",
                "fold1,0.75",
                "fold2,1",
                "mean,0.75",
                "std,0.25",
            ]
        );
        assert!(!csv.contains("wall"));
    }

    #[test]
    fn json_round_trip() {
        let report = sample_report();
        let json = report.to_json().unwrap();
        let back = RunReport::from_json(&json).unwrap();
        assert_eq!(back.task, report.task);
        assert_eq!(back.folds, report.folds);
        assert_eq!(back.fingerprint, report.fingerprint);
        assert_eq!(back.wall_clock_seconds, report.wall_clock_seconds);
    }

    #[test]
    fn fingerprint_ignores_wall_clock_and_tracks_config() {
        let a = RunReport::new(
            "t",
            "d",
            vec!["accuracy".into()],
            vec![vec![1.0]],
            sample_config(),
            1.0,
        )
        .unwrap();
        let b = RunReport::new(
            "t",
            "d",
            vec!["accuracy".into()],
            vec![vec![0.0]],
            sample_config(),
            99.0,
        )
        .unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);

        let mut other = sample_config();
        other.insert("seed".into(), "8".into());
        let c = RunReport::new(
            "t",
            "d",
            vec!["accuracy".into()],
            vec![vec![1.0]],
            other,
            1.0,
        )
        .unwrap();
        assert_ne!(a.fingerprint, c.fingerprint);
    }

    #[test]
    fn fingerprint_is_sorted_key_value_hash() {
        // insertion order must not matter: BTreeMap sorts, and the hash
        // covers the sorted key=value lines
        let mut forward = BTreeMap::new();
        forward.insert("a".to_string(), "1".to_string());
        forward.insert("b".to_string(), "2".to_string());
        let mut reverse = BTreeMap::new();
        reverse.insert("b".to_string(), "2".to_string());
        reverse.insert("a".to_string(), "1".to_string());
        assert_eq!(config_fingerprint(&forward), config_fingerprint(&reverse));

        let mut hasher = Sha256::new();
        hasher.update(b"a=1\nb=2\n");
        let expected: Vec<String> = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(config_fingerprint(&forward), expected.join(""));
    }

    #[test]
    fn write_creates_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();
        let (csv_path, json_path) = report.write(dir.path(), "demo").unwrap();
        assert!(csv_path.exists());
        assert!(json_path.exists());
        let loaded = RunReport::load(&json_path).unwrap();
        assert_eq!(loaded.fingerprint, report.fingerprint);
    }

    #[test]
    fn mismatched_row_width_is_rejected() {
        let err = RunReport::new(
            "t",
            "d",
            vec!["auc".into(), "ap".into()],
            vec![vec![0.9]],
            BTreeMap::new(),
            1.0,
        );
        assert!(err.is_err());
    }
}
