//! Adjacency transforms: exact-distance neighborhoods, two-hop enlargement,
//! matrix powers, self-loops, and symmetric normalization.
//!
//! The enlarged operator feeds a node's exact-distance-2 neighbors into the
//! same aggregation step as its direct neighbors: `a1+a2` normalizes
//! A1 + A2 + I instead of the usual A1 + I. The `a^2` and `a^2+2i` ids
//! cover the walk-count alternatives used for ablation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{adjacency, BinaryAdjacency, Graph};

/// Stable lowercase ids used verbatim in CLI flags, config files, and
/// report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    /// `a1`: the plain first-order adjacency, normalized with one self-loop.
    FirstOrder,
    /// `a1+a2`: first-order plus exact-distance-2 neighbors.
    Enlarged,
    /// `a^2`: length-2 walk counts with the diagonal zeroed.
    SquaredWalks,
    /// `a^2+2i`: like `a^2` but with self-loop weight 2.
    SquaredWalksTwoLoop,
}

impl Transform {
    pub const ALL: [Transform; 4] = [
        Transform::FirstOrder,
        Transform::Enlarged,
        Transform::SquaredWalks,
        Transform::SquaredWalksTwoLoop,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Transform::FirstOrder => "a1",
            Transform::Enlarged => "a1+a2",
            Transform::SquaredWalks => "a^2",
            Transform::SquaredWalksTwoLoop => "a^2+2i",
        }
    }

    /// Weight of the self-connection term added before normalization.
    pub fn self_loop_weight(self) -> f64 {
        match self {
            Transform::SquaredWalksTwoLoop => 2.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Transform::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Transform::ALL.iter().map(|t| t.id()).collect();
                Error::Config(format!(
                    "unknown transform {s:?}, valid ids: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Which matrix supplies the degrees for symmetric normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeSource {
    /// Row sums of the matrix being normalized (the operand plus self-loops).
    #[default]
    Operand,
    /// Row sums of the first-order adjacency plus self-loops, regardless of
    /// the operand. Ablation switch; identical to `Operand` for `a1`.
    FirstOrder,
}

impl fmt::Display for DegreeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeSource::Operand => "operand",
            DegreeSource::FirstOrder => "a1",
        })
    }
}

impl FromStr for DegreeSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "operand" => Ok(DegreeSource::Operand),
            "a1" => Ok(DegreeSource::FirstOrder),
            other => Err(Error::Config(format!(
                "unknown degree-source {other:?}, valid values: operand, a1"
            ))),
        }
    }
}

/// Sparse symmetric matrix with nonnegative integer entries, keyed by
/// (row, col). Holds walk counts such as A^2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), u64>,
}

impl IntegerMatrix {
    pub fn zero(n: usize) -> Self {
        IntegerMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Nonzero entries in sorted (row, col) order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    /// Copy with the diagonal removed.
    pub fn without_diagonal(&self) -> IntegerMatrix {
        IntegerMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .filter(|((i, j), _)| i != j)
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }

    /// Dense copy for small-matrix assertions.
    pub fn dense(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; self.n]; self.n];
        for (&(i, j), &v) in &self.entries {
            out[i][j] = v;
        }
        out
    }

    fn insert_nonzero(&mut self, i: usize, j: usize, v: u64) {
        if v > 0 {
            self.entries.insert((i, j), v);
        }
    }
}

impl From<&BinaryAdjacency> for IntegerMatrix {
    fn from(a: &BinaryAdjacency) -> Self {
        let mut m = IntegerMatrix::zero(a.n());
        for (i, j) in a.entries() {
            m.insert_nonzero(i, j, 1);
        }
        m
    }
}

/// Real symmetric matrix in sorted sparse triplet form; the output of
/// [`sym_normalize`] and [`build_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl NormalizedAdjacency {
    /// Build from triplets. Entries must be finite, nonnegative, sorted by
    /// (row, col), unique, and symmetric within 1e-12.
    pub fn from_entries(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut lookup = BTreeMap::new();
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in &entries {
            if i >= n || j >= n {
                return Err(Error::Index(format!(
                    "entry ({i}, {j}) outside {n}x{n} matrix"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!(
                    "entry ({i}, {j}) has invalid value {v}"
                )));
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(Error::Invalid("entries not sorted by (row, col)".into()));
            }
            prev = Some((i, j));
            lookup.insert((i, j), v);
        }
        for (&(i, j), &v) in &lookup {
            let mirror = lookup.get(&(j, i)).copied().unwrap_or(0.0);
            if (v - mirror).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "asymmetric entries at ({i}, {j}): {v} vs {mirror}"
                )));
            }
        }
        Ok(NormalizedAdjacency { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j), |&(r, c, _)| (r, c))
            .map(|idx| self.entries[idx].2)
            .unwrap_or(0.0)
    }

    /// Dense copy for small-matrix assertions.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for &(i, j, v) in &self.entries {
            out[i][j] = v;
        }
        out
    }
}

/// Pairs at shortest-path distance exactly `k`, via per-source BFS
/// truncated at depth `k`. Zero diagonal, symmetric; `k = 1` recovers the
/// plain adjacency.
pub fn exact_distance_neighborhood(g: &Graph, k: usize) -> Result<BinaryAdjacency> {
    if k == 0 {
        return Err(Error::Invalid(
            "exact-distance neighborhood requires k >= 1".into(),
        ));
    }
    let n = g.n();
    let mut pairs = Vec::new();
    let mut dist: Vec<Option<usize>> = vec![None; n];
    for src in 0..n {
        dist.iter_mut().for_each(|d| *d = None);
        dist[src] = Some(0);
        let mut frontier = vec![src];
        for depth in 1..=k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in g.neighbors(u) {
                    if dist[v].is_none() {
                        dist[v] = Some(depth);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        for &v in &frontier {
            if src < v {
                pairs.push((src, v));
            }
        }
    }
    BinaryAdjacency::from_pairs(n, pairs)
}

/// The two-hop enlargement: entries of A1 united with entries of A2.
/// Distance is unique per pair, so the union is disjoint and the result
/// stays binary.
pub fn enlarge(g: &Graph) -> BinaryAdjacency {
    let a1 = adjacency(g);
    let a2 = exact_distance_neighborhood(g, 2).expect("k = 2 is valid");
    a1.union(&a2).expect("both matrices share the graph's n")
}

/// Exact integer matrix power A^p; (A^2)_{ij} counts length-2 walks from i
/// to j, so the diagonal of A^2 equals node degrees.
pub fn matrix_power(a: &BinaryAdjacency, p: usize) -> Result<IntegerMatrix> {
    if p == 0 {
        return Err(Error::Invalid(
            "matrix power requires p >= 1; add_scaled_identity produces the identity".into(),
        ));
    }
    let neighbors = a.neighbor_lists();
    let mut current = IntegerMatrix::from(a);
    for _ in 1..p {
        let mut next = IntegerMatrix::zero(a.n());
        for (i, j, v) in current.entries() {
            for &k in &neighbors[j] {
                *next.entries.entry((i, k)).or_insert(0) += v;
            }
        }
        current = next;
    }
    Ok(current)
}

/// M + c * I_n.
pub fn add_scaled_identity(m: &IntegerMatrix, c: u64) -> IntegerMatrix {
    let mut out = m.clone();
    if c > 0 {
        for i in 0..out.n {
            *out.entries.entry((i, i)).or_insert(0) += c;
        }
    }
    out
}

/// D^{-1/2} (M + c I) D^{-1/2} with D the diagonal of row sums of M + cI.
/// Rows whose sum is zero (possible only for c = 0 and an isolated node)
/// come out all zero instead of dividing by zero.
pub fn sym_normalize(m: &IntegerMatrix, self_loop_weight: f64) -> Result<NormalizedAdjacency> {
    let degrees = operand_row_sums(m, self_loop_weight)?;
    normalize_with_degrees(m, self_loop_weight, &degrees)
}

/// [`sym_normalize`] with externally supplied degrees, used by the
/// `degree-source = a1` ablation.
pub fn sym_normalize_with_degrees(
    m: &IntegerMatrix,
    self_loop_weight: f64,
    degrees: &[f64],
) -> Result<NormalizedAdjacency> {
    if degrees.len() != m.n {
        return Err(Error::Dimension(format!(
            "{} degrees for a {n}x{n} matrix",
            degrees.len(),
            n = m.n
        )));
    }
    if self_loop_weight < 0.0 || !self_loop_weight.is_finite() {
        return Err(Error::Invalid(format!(
            "self-loop weight must be finite and nonnegative, got {self_loop_weight}"
        )));
    }
    normalize_with_degrees(m, self_loop_weight, degrees)
}

fn operand_row_sums(m: &IntegerMatrix, self_loop_weight: f64) -> Result<Vec<f64>> {
    if self_loop_weight < 0.0 || !self_loop_weight.is_finite() {
        return Err(Error::Invalid(format!(
            "self-loop weight must be finite and nonnegative, got {self_loop_weight}"
        )));
    }
    let mut sums = vec![self_loop_weight; m.n];
    for (i, _, v) in m.entries() {
        sums[i] += v as f64;
    }
    Ok(sums)
}

fn normalize_with_degrees(
    m: &IntegerMatrix,
    self_loop_weight: f64,
    degrees: &[f64],
) -> Result<NormalizedAdjacency> {
    let mut shifted: BTreeMap<(usize, usize), f64> = m
        .entries()
        .map(|(i, j, v)| ((i, j), v as f64))
        .collect();
    if self_loop_weight > 0.0 {
        for i in 0..m.n {
            *shifted.entry((i, i)).or_insert(0.0) += self_loop_weight;
        }
    }
    let entries: Vec<(usize, usize, f64)> = shifted
        .into_iter()
        .map(|((i, j), v)| {
            let scale = degrees[i] * degrees[j];
            let value = if scale > 0.0 { v / scale.sqrt() } else { 0.0 };
            (i, j, value)
        })
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    NormalizedAdjacency::from_entries(m.n, entries)
}

/// Build the normalized message-passing operator named by `t` from a graph.
pub fn build_transform(t: Transform, g: &Graph) -> NormalizedAdjacency {
    build_transform_with(t, g, DegreeSource::Operand)
}

/// [`build_transform`] with an explicit degree source.
pub fn build_transform_with(
    t: Transform,
    g: &Graph,
    degree_source: DegreeSource,
) -> NormalizedAdjacency {
    let c = t.self_loop_weight();
    let operand = match t {
        Transform::FirstOrder => IntegerMatrix::from(&adjacency(g)),
        Transform::Enlarged => IntegerMatrix::from(&enlarge(g)),
        Transform::SquaredWalks | Transform::SquaredWalksTwoLoop => {
            let squared = matrix_power(&adjacency(g), 2).expect("p = 2 is valid");
            squared.without_diagonal()
        }
    };
    let result = match degree_source {
        DegreeSource::Operand => sym_normalize(&operand, c),
        DegreeSource::FirstOrder => {
            let first = IntegerMatrix::from(&adjacency(g));
            let degrees =
                operand_row_sums(&first, c).expect("self-loop weight is valid");
            sym_normalize_with_degrees(&operand, c, &degrees)
        }
    };
    result.expect("transform operands are nonnegative and well-formed")
}

/// Parse `name` as a transform id and build its operator; unknown ids give
/// a configuration error listing the valid ids.
pub fn build_transform_named(name: &str, g: &Graph) -> Result<NormalizedAdjacency> {
    Ok(build_transform(name.parse()?, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{complete_graph, cycle_graph, path_graph, star_graph};
    use approx::assert_relative_eq;

    fn entry_set(a: &BinaryAdjacency) -> Vec<(usize, usize)> {
        a.entries().collect()
    }

    #[test]
    fn distance_two_on_triangle_is_empty() {
        let a2 = exact_distance_neighborhood(&complete_graph(3), 2).unwrap();
        assert_eq!(a2.num_entries(), 0);
    }

    #[test]
    fn distance_two_on_path() {
        let a2 = exact_distance_neighborhood(&path_graph(3), 2).unwrap();
        assert_eq!(entry_set(&a2), vec![(0, 2), (2, 0)]);
    }

    #[test]
    fn distance_two_on_square_is_diagonals() {
        let a2 = exact_distance_neighborhood(&cycle_graph(4), 2).unwrap();
        assert_eq!(entry_set(&a2), vec![(0, 2), (1, 3), (2, 0), (3, 1)]);
    }

    #[test]
    fn distance_one_recovers_adjacency() {
        let g = cycle_graph(5);
        let a1 = exact_distance_neighborhood(&g, 1).unwrap();
        assert_eq!(a1, adjacency(&g));
    }

    #[test]
    fn distance_zero_is_rejected() {
        assert!(exact_distance_neighborhood(&path_graph(2), 0).is_err());
    }

    #[test]
    fn enlarge_square_gives_complete_graph() {
        let enlarged = enlarge(&cycle_graph(4));
        assert_eq!(enlarged, adjacency(&complete_graph(4)));
    }

    #[test]
    fn enlarge_triangle_is_unchanged() {
        let g = complete_graph(3);
        assert_eq!(enlarge(&g), adjacency(&g));
    }

    #[test]
    fn enlarge_star_gives_complete_graph() {
        let enlarged = enlarge(&star_graph(4));
        assert_eq!(enlarged, adjacency(&complete_graph(4)));
    }

    #[test]
    fn squared_path_matches_hand_computation() {
        let squared = matrix_power(&adjacency(&path_graph(3)), 2).unwrap();
        assert_eq!(
            squared.dense(),
            vec![vec![1, 0, 1], vec![0, 2, 0], vec![1, 0, 1]]
        );
    }

    #[test]
    fn power_one_is_the_adjacency() {
        let a = adjacency(&cycle_graph(5));
        let p1 = matrix_power(&a, 1).unwrap();
        assert_eq!(p1, IntegerMatrix::from(&a));
    }

    #[test]
    fn power_zero_is_rejected() {
        assert!(matrix_power(&adjacency(&path_graph(2)), 0).is_err());
    }

    #[test]
    fn squared_triangle_diagonal_is_degrees() {
        let squared = matrix_power(&adjacency(&complete_graph(3)), 2).unwrap();
        assert_eq!((0..3).map(|i| squared.get(i, i)).collect::<Vec<_>>(), [2, 2, 2]);
    }

    #[test]
    fn scaled_identity_on_squared_path() {
        let squared = matrix_power(&adjacency(&path_graph(3)), 2).unwrap();
        assert_eq!(
            add_scaled_identity(&squared, 2).dense(),
            vec![vec![3, 0, 1], vec![0, 4, 0], vec![1, 0, 3]]
        );
    }

    #[test]
    fn scaled_identity_with_zero_is_identity_op() {
        let squared = matrix_power(&adjacency(&path_graph(3)), 2).unwrap();
        assert_eq!(add_scaled_identity(&squared, 0), squared);
    }

    #[test]
    fn scaled_identity_on_zero_matrix() {
        let out = add_scaled_identity(&IntegerMatrix::zero(2), 2);
        assert_eq!(out.dense(), vec![vec![2, 0], vec![0, 2]]);
    }

    #[test]
    fn normalize_single_edge() {
        let m = IntegerMatrix::from(&adjacency(&path_graph(2)));
        let out = sym_normalize(&m, 1.0).unwrap();
        assert_eq!(out.dense(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn normalize_isolated_node_with_self_loop() {
        let out = sym_normalize(&IntegerMatrix::zero(1), 1.0).unwrap();
        assert_eq!(out.dense(), vec![vec![1.0]]);
    }

    #[test]
    fn normalize_path_off_diagonal_entry() {
        let m = IntegerMatrix::from(&adjacency(&path_graph(3)));
        let out = sym_normalize(&m, 1.0).unwrap();
        assert_relative_eq!(out.get(0, 1), 1.0 / 6.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn normalize_zero_degree_row_stays_zero() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let m = IntegerMatrix::from(&adjacency(&g));
        let out = sym_normalize(&m, 0.0).unwrap();
        for &(_, _, v) in out.entries() {
            assert!(v.is_finite());
        }
        assert_eq!(out.get(2, 2), 0.0);
        assert_eq!(out.get(0, 1), 1.0);
    }

    #[test]
    fn negative_self_loop_weight_is_rejected() {
        let m = IntegerMatrix::zero(2);
        assert!(sym_normalize(&m, -1.0).is_err());
    }

    #[test]
    fn transform_ids_round_trip() {
        for t in Transform::ALL {
            assert_eq!(t.id().parse::<Transform>().unwrap(), t);
        }
    }

    #[test]
    fn unknown_transform_lists_valid_ids() {
        let err = "a3".parse::<Transform>().unwrap_err().to_string();
        for id in ["a1", "a1+a2", "a^2", "a^2+2i"] {
            assert!(err.contains(id), "{err}");
        }
    }

    #[test]
    fn first_order_transform_on_single_edge() {
        let out = build_transform(Transform::FirstOrder, &path_graph(2));
        assert_eq!(out.dense(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn enlarged_equals_first_order_on_triangle() {
        let g = complete_graph(3);
        let enlarged = build_transform(Transform::Enlarged, &g);
        let first = build_transform(Transform::FirstOrder, &g);
        assert_eq!(enlarged, first);
    }

    #[test]
    fn enlarged_path_is_normalized_triangle() {
        let out = build_transform(Transform::Enlarged, &path_graph(3));
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(out.get(i, j), 1.0 / 3.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn squared_transform_zeroes_walk_diagonal() {
        let out = build_transform(Transform::SquaredWalks, &path_graph(3));
        // operand [[1,0,1],[0,1,0],[1,0,1]] after zeroing the diagonal and
        // adding one self-loop; row sums [2, 1, 2]
        assert_relative_eq!(out.get(0, 0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.get(1, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(out.get(0, 2), 0.5, max_relative = 1e-12);
        assert_eq!(out.get(0, 1), 0.0);
    }

    #[test]
    fn two_loop_transform_uses_weight_two() {
        let out = build_transform(Transform::SquaredWalksTwoLoop, &path_graph(3));
        // operand [[2,0,1],[0,2,0],[1,0,2]]; row sums [3, 2, 3]
        assert_relative_eq!(out.get(0, 0), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(out.get(1, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(out.get(0, 2), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn degree_source_ablation_changes_diagonal() {
        let g = path_graph(3);
        let operand = build_transform_with(Transform::SquaredWalks, &g, DegreeSource::Operand);
        let first = build_transform_with(Transform::SquaredWalks, &g, DegreeSource::FirstOrder);
        assert_relative_eq!(operand.get(1, 1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(first.get(1, 1), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn degree_source_is_irrelevant_for_first_order() {
        let g = cycle_graph(5);
        assert_eq!(
            build_transform_with(Transform::FirstOrder, &g, DegreeSource::Operand),
            build_transform_with(Transform::FirstOrder, &g, DegreeSource::FirstOrder)
        );
    }

    #[test]
    fn build_transform_named_rejects_unknown() {
        assert!(build_transform_named("a3", &path_graph(2)).is_err());
        assert!(build_transform_named("a1+a2", &path_graph(2)).is_ok());
    }
}
