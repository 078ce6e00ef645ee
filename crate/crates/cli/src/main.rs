//! `twohop` — batch front end for the neighborhood-enlargement
//! experiments: standalone adjacency transforms, config-driven training
//! runs, and report comparison.

mod compare;
mod config;
mod datasets;
mod run;
mod transform_cmd;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use twohop::transforms::{DegreeSource, Transform};

use crate::run::RunOptions;

#[derive(Parser)]
#[command(
    name = "twohop",
    version,
    about = "Graph learning experiments with two-hop neighborhood enlargement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply an adjacency transform to an edge-list graph and write the
    /// matrix as sorted `i j value` triplets.
    Transform {
        /// Edge-list file (`n=<N>` header line, then one `i j` pair per line).
        #[arg(long)]
        input: PathBuf,
        /// Transform id: a1, a1+a2, a^2, a^2+2i.
        #[arg(long)]
        transform: String,
        /// Output triplet file.
        #[arg(long)]
        output: PathBuf,
        /// Write the symmetrically normalized operator (with the
        /// transform's self-loop weight) instead of the raw structural
        /// matrix.
        #[arg(long)]
        normalized: bool,
        /// Degree source for normalization: operand or a1.
        #[arg(long, default_value = "operand")]
        degree_source: String,
    },
    /// Execute the experiment described by a config file; writes CSV and
    /// JSON reports and prints a summary.
    Run {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run folds sequentially (results are identical either way).
        #[arg(long)]
        single_thread: bool,
        /// Directory for report files.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Compare two or more JSON reports of the same task and dataset;
    /// deltas are relative to the first report.
    Compare {
        /// Report JSON files written by `run`.
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Directory for the comparison CSV.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Transform {
            input,
            transform,
            output,
            normalized,
            degree_source,
        } => {
            let transform: Transform = transform.parse()?;
            let degree_source: DegreeSource = degree_source.parse()?;
            transform_cmd::cmd_transform(&input, transform, &output, normalized, degree_source)
        }
        Command::Run {
            config,
            seed,
            single_thread,
            out_dir,
        } => run::cmd_run(&RunOptions {
            config,
            seed,
            single_thread,
            out_dir,
        }),
        Command::Compare { reports, out_dir } => compare::cmd_compare(&reports, &out_dir),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
