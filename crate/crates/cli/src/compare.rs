//! The `compare` verb: align two or more run reports and show per-metric
//! deltas against the first report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use twohop::harness::RunReport;

/// Verify the reports measure the same thing: identical task, dataset,
/// and metric columns.
fn check_comparable(labeled: &[(String, RunReport)]) -> Result<()> {
    let (first_label, first) = &labeled[0];
    for (label, report) in &labeled[1..] {
        if report.task != first.task {
            bail!(
                "cannot compare task {} ({label}) with task {} ({first_label})",
                report.task,
                first.task
            );
        }
        if report.dataset != first.dataset {
            bail!(
                "cannot compare dataset {} ({label}) with dataset {} ({first_label})",
                report.dataset,
                first.dataset
            );
        }
        if report.metrics != first.metrics {
            bail!(
                "report {label} has metrics [{}] but {first_label} has [{}]",
                report.metrics.join(", "),
                first.metrics.join(", ")
            );
        }
    }
    Ok(())
}

/// Machine-readable comparison: one row per report, full-precision means,
/// stds, and deltas relative to the first report.
pub fn comparison_csv(labeled: &[(String, RunReport)]) -> Result<String> {
    check_comparable(labeled)?;
    let first = &labeled[0].1;
    let mut out = String::from("report");
    for metric in &first.metrics {
        let _ = write!(out, ",{metric}_mean,{metric}_std,{metric}_delta");
    }
    out.push('\n');
    for (label, report) in labeled {
        let _ = write!(out, "{label}");
        for m in 0..first.metrics.len() {
            let delta = report.mean(m) - first.mean(m);
            let _ = write!(out, ",{},{},{delta}", report.mean(m), report.std(m));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Human-readable aligned table with four-decimal rounding.
pub fn comparison_table(labeled: &[(String, RunReport)]) -> Result<String> {
    check_comparable(labeled)?;
    let first = &labeled[0].1;
    let mut header: Vec<String> = vec!["report".to_string()];
    for metric in &first.metrics {
        header.push(format!("{metric} mean"));
        header.push(format!("{metric} std"));
        header.push(format!("{metric} delta"));
    }
    let mut rows: Vec<Vec<String>> = vec![header];
    for (label, report) in labeled {
        let mut row = vec![label.clone()];
        for m in 0..first.metrics.len() {
            row.push(format!("{:.4}", report.mean(m)));
            row.push(format!("{:.4}", report.std(m)));
            row.push(format!("{:+.4}", report.mean(m) - first.mean(m)));
        }
        rows.push(row);
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<width$}", width = widths[c]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_compare(paths: &[PathBuf], out_dir: &Path) -> Result<()> {
    if paths.len() < 2 {
        bail!("compare needs at least two report files");
    }
    let labeled: Vec<(String, RunReport)> = paths
        .iter()
        .map(|path| {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let report = RunReport::load(path)
                .with_context(|| format!("loading report {}", path.display()))?;
            Ok((label, report))
        })
        .collect::<Result<_>>()?;

    print!("{}", comparison_table(&labeled)?);
    let csv = comparison_csv(&labeled)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("compare.csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}
