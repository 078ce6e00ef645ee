//! The `transform` verb: read an edge list, apply a named adjacency
//! transform, write the result as sorted `i j value` triplets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use twohop::graph::{adjacency, load_edge_list, Graph};
use twohop::transforms::{
    build_transform_with, enlarge, matrix_power, DegreeSource, IntegerMatrix, Transform,
};

/// The structural matrix a transform reads from the graph, before any
/// self-loops or normalization: the binary adjacency for `a1`, its
/// distance-2 enlargement for `a1+a2`, and off-diagonal length-2 walk
/// counts for both squared-walk transforms (their self-loop weights only
/// differ under `--normalized`).
fn raw_operand(t: Transform, g: &Graph) -> Result<IntegerMatrix> {
    Ok(match t {
        Transform::FirstOrder => IntegerMatrix::from(&adjacency(g)),
        Transform::Enlarged => IntegerMatrix::from(&enlarge(g)),
        Transform::SquaredWalks | Transform::SquaredWalksTwoLoop => {
            matrix_power(&adjacency(g), 2)?.without_diagonal()
        }
    })
}

pub fn cmd_transform(
    input: &Path,
    transform: Transform,
    output: &Path,
    normalized: bool,
    degree_source: DegreeSource,
) -> Result<()> {
    let g = load_edge_list(input)?;
    let (text, count) = if normalized {
        let m = build_transform_with(transform, &g, degree_source);
        let mut text = String::new();
        for &(i, j, v) in m.entries() {
            let _ = writeln!(text, "{i} {j} {v}");
        }
        (text, m.entries().len())
    } else {
        let m = raw_operand(transform, &g)?;
        let mut text = String::new();
        for (i, j, v) in m.entries() {
            let _ = writeln!(text, "{i} {j} {v}");
        }
        (text, m.num_entries())
    };
    fs::write(output, text).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "wrote {count} triplets ({} form of {transform} on {} nodes) to {}",
        if normalized { "normalized" } else { "raw" },
        g.n(),
        output.display()
    );
    Ok(())
}
