//! Seeded synthetic graphs and datasets.
//!
//! Classic small graphs (paths, cycles, stars, cliques) double as test
//! fixtures; the dataset generators produce reproducible corpora for graph
//! classification, node classification, and link prediction experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::{bfs_distances, Dataset, Graph};

/// Path graph P_n: nodes 0..n chained in a line. P_1 is a single node.
pub fn path_graph(n: usize) -> Graph {
    Graph::new(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1))).expect("path edges are valid")
}

/// Cycle graph C_n (n >= 3).
pub fn cycle_graph(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 nodes");
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle edges are valid")
}

/// Complete graph K_n.
pub fn complete_graph(n: usize) -> Graph {
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
    Graph::new(n, edges).expect("clique edges are valid")
}

/// Star S_n: center 0 joined to leaves 1..n.
pub fn star_graph(n: usize) -> Graph {
    assert!(n >= 1, "star needs a center");
    Graph::new(n, (1..n).map(|leaf| (0, leaf))).expect("star edges are valid")
}

/// Erdos-Renyi G(n, p): each possible edge included independently with
/// probability p.
pub fn gnp_random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("sampled edges are valid")
}

/// Two equally sized communities over `n` nodes, each with ring-lattice
/// structure: a block's nodes sit on a ring and every pair at ring
/// distance at most 4 is connected with probability `p_in`; cross-block
/// pairs are connected with probability `p_out`. Nodes 0..n/2 form the
/// first block.
///
/// The local band gives held-out edges geometric context (their
/// endpoints stay close through surviving band edges), so the graph
/// suits link prediction; a uniform Bernoulli block, by contrast, has no
/// within-block structure to generalize from.
pub fn two_block_graph(n: usize, p_in: f64, p_out: f64, rng: &mut ChaCha8Rng) -> Graph {
    let half = n / 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if (i < half) == (j < half) {
                let size = if i < half { half } else { n - half };
                let diff = j - i;
                let ring_distance = diff.min(size - diff);
                if ring_distance <= 4 {
                    p_in
                } else {
                    0.0
                }
            } else {
                p_out
            };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("sampled edges are valid")
}

/// Stochastic block model graph for node classification: `num_classes`
/// contiguous equal blocks, edge probability `p_in` within a block and
/// `p_out` across blocks. Node features are a one-hot class indicator
/// (first `num_classes` of `feature_dim` coordinates) plus `noise` times
/// standard Gaussian noise on every coordinate, and node labels are the
/// block ids.
pub fn sbm_node_graph(
    n: usize,
    num_classes: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Graph {
    assert!(num_classes >= 2, "need at least two blocks");
    assert!(
        feature_dim >= num_classes,
        "feature_dim must fit the one-hot class indicator"
    );
    let labels: Vec<usize> = (0..n).map(|i| i * num_classes / n).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let features: Vec<Vec<f64>> = labels
        .iter()
        .map(|&class| {
            (0..feature_dim)
                .map(|d| {
                    let signal = if d == class { 1.0 } else { 0.0 };
                    let eps: f64 = StandardNormal.sample(rng);
                    signal + noise * eps
                })
                .collect()
        })
        .collect();
    Graph::new(n, edges)
        .expect("sampled edges are valid")
        .with_features(features)
        .expect("feature rows match node count")
        .with_node_labels(labels)
        .expect("label count matches node count")
}

/// Thirty fixed connected graphs on three to six nodes labeled by
/// triangle containment: fifteen positives (label 1) each contain a
/// triangle, fifteen negatives (label 0) are triangle-free.
///
/// The roster is hand-picked for separability by a sum-readout network
/// with a linear head. Such a network maps every regular graph to a
/// scalar multiple of a per-degree direction (all nodes of a d-regular
/// graph share one embedding at every layer), so graphs are chosen such
/// that no cross-class pair has proportional 1-WL color histograms: the
/// only regular graphs are positives (K3, K4, K5, and the triangular
/// prism), every negative is non-regular, and the companion test
/// verifies the non-proportionality property for every cross-class pair.
pub fn triangle_dataset() -> Dataset {
    // (node count, edge list), positives first
    let positives: Vec<(usize, Vec<(usize, usize)>)> = vec![
        // K3
        (3, vec![(0, 1), (0, 2), (1, 2)]),
        // tailed triangle
        (4, vec![(0, 1), (0, 2), (1, 2), (2, 3)]),
        // triangle with a two-edge tail
        (5, vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]),
        // triangle with a three-edge tail
        (6, vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5)]),
        // diamond (K4 minus an edge)
        (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]),
        // K4
        (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        // lollipop: K4 with a pendant
        (
            5,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4)],
        ),
        // bowtie: two triangles sharing a vertex
        (5, vec![(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]),
        // house: square with a triangular roof
        (
            5,
            vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (3, 4)],
        ),
        // kite: diamond with a pendant
        (
            5,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (3, 4)],
        ),
        // K5
        (
            5,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
        ),
        // net: triangle with a pendant on every vertex
        (6, vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 4), (2, 5)]),
        // wheel: hub joined to every vertex of C5
        (
            6,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (1, 5),
            ],
        ),
        // triangular prism
        (
            6,
            vec![
                (0, 1),
                (0, 2),
                (1, 2),
                (3, 4),
                (3, 5),
                (4, 5),
                (0, 3),
                (1, 4),
                (2, 5),
            ],
        ),
        // triangle and square sharing one vertex
        (
            6,
            vec![(0, 1), (0, 2), (1, 2), (0, 3), (3, 4), (4, 5), (0, 5)],
        ),
    ];
    let negatives: Vec<(usize, Vec<(usize, usize)>)> = vec![
        // P3
        (3, vec![(0, 1), (1, 2)]),
        // P4
        (4, vec![(0, 1), (1, 2), (2, 3)]),
        // P5
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        // P6
        (6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]),
        // stars K1,3 / K1,4 / K1,5
        (4, vec![(0, 1), (0, 2), (0, 3)]),
        (5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]),
        (6, vec![(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]),
        // fork: P4 with a leaf on a middle vertex
        (5, vec![(0, 1), (1, 2), (2, 3), (1, 4)]),
        // double star: adjacent centers with two leaves each
        (6, vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]),
        // complete bipartite K2,3 and K2,4
        (
            5,
            vec![(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)],
        ),
        (
            6,
            vec![
                (0, 2),
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 2),
                (1, 3),
                (1, 4),
                (1, 5),
            ],
        ),
        // spider: two legs of length two and one leaf
        (6, vec![(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)]),
        // caterpillar: P4 spine with a leaf on each middle vertex
        (6, vec![(0, 1), (1, 2), (2, 3), (1, 4), (2, 5)]),
        // H graph: two paths joined across their middles
        (6, vec![(0, 1), (1, 2), (3, 4), (4, 5), (1, 4)]),
        // broom: P3 with three leaves at one end
        (6, vec![(0, 1), (1, 2), (2, 3), (2, 4), (2, 5)]),
    ];
    let mut graphs = Vec::with_capacity(30);
    for (n, edges) in positives {
        graphs.push(
            Graph::new(n, edges)
                .expect("fixed edge lists are valid")
                .with_label(1),
        );
    }
    for (n, edges) in negatives {
        graphs.push(
            Graph::new(n, edges)
                .expect("fixed edge lists are valid")
                .with_label(0),
        );
    }
    Dataset::new("triangles", graphs, 2).expect("fixed dataset is consistent")
}

fn weighted_type(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (idx, &w) in weights.iter().enumerate() {
        draw -= w;
        if draw < 0.0 {
            return idx;
        }
    }
    weights.len() - 1
}

fn one_hot(index: usize, dim: usize) -> Vec<f64> {
    let mut row = vec![0.0; dim];
    row[index] = 1.0;
    row
}

/// One molecule-style graph for [`motif_molecule_dataset`]: a degree-capped
/// random tree (plus at most one distance-preserving chord) grown around a
/// planted donor-acceptor path. Positives separate the donor (type 5) and
/// acceptor (type 6) by a single bridge node, shortest-path distance 2;
/// negatives push the pair 5 or 6 bonds apart. Every other node carries
/// filler type 0, and each graph holds exactly one donor and one acceptor,
/// so type counts are identical across classes and the label is carried by
/// the pair separation alone. The gap between the two separations matters:
/// in positives some node sees both typed nodes within two hops, while in
/// negatives no node does, and under the enlarged operator the positive
/// pair becomes directly adjacent.
fn motif_molecule(positive: bool, rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.gen_range(12..=20);
    let span = if positive { 2 } else { rng.gen_range(5..=6) };
    // Planted skeleton: a path from the donor (node 0) to the acceptor
    // (node `span`). Growing the rest of the graph as tree leaves keeps
    // the planted distance exact because tree paths are unique.
    let mut degrees = vec![0usize; n];
    let mut edges: Vec<(usize, usize)> = (0..span).map(|i| (i, i + 1)).collect();
    for &(a, b) in &edges {
        degrees[a] += 1;
        degrees[b] += 1;
    }
    for i in span + 1..n {
        let parent = loop {
            let candidate = rng.gen_range(0..i);
            if degrees[candidate] < 3 {
                break candidate;
            }
        };
        degrees[parent] += 1;
        degrees[i] += 1;
        edges.push((parent, i));
    }
    // At most one ring-closing chord, kept only when it leaves the
    // donor-acceptor distance untouched.
    if rng.gen_bool(0.5) {
        for _ in 0..20 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b || degrees[a] >= 3 || degrees[b] >= 3 {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if edges.contains(&pair) {
                continue;
            }
            let candidate = Graph::new(n, edges.iter().copied().chain([pair]))
                .expect("chord candidate edges are valid");
            let dist = bfs_distances(&candidate, 0).expect("graph is nonempty");
            if dist[span] == Some(span) {
                edges.push(pair);
            }
            break;
        }
    }
    let g = Graph::new(n, edges).expect("motif edges are valid");
    let mut types: Vec<usize> = vec![0; n];
    types[0] = 5;
    types[span] = 6;
    let features: Vec<Vec<f64>> = types.iter().map(|&t| one_hot(t, 7)).collect();
    g.with_features(features)
        .expect("feature rows match node count")
        .with_label(usize::from(positive))
}

/// 188 molecule-style graphs with 7 one-hot node types, 125 positives
/// and 63 negatives. The class signal is the donor-acceptor separation
/// (distance 2 versus 5-6), which an enlarged neighborhood reads off
/// directly as adjacency.
pub fn motif_molecule_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let mut graphs = Vec::with_capacity(188);
    for _ in 0..125 {
        graphs.push(motif_molecule(true, rng));
    }
    for _ in 0..63 {
        graphs.push(motif_molecule(false, rng));
    }
    Dataset::new("motif-molecules", graphs, 2).expect("generated dataset is consistent")
}

/// One chain-with-chords graph for [`proteins_like_dataset`]. The class
/// controls the probability of third-neighbor chords along the chain,
/// with overlapping ranges so neither class is trivially separable.
fn protein_like(class: usize, rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.gen_range(20..=40);
    let chord_p = if class == 0 {
        rng.gen_range(0.05..0.28)
    } else {
        rng.gen_range(0.22..0.50)
    };
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for i in 0..n - 3 {
        if rng.gen::<f64>() < chord_p {
            edges.push((i, i + 3));
        }
    }
    for _ in 0..3 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && a.abs_diff(b) > 3 {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let g = Graph::new(n, edges).expect("chain edges are valid");
    let type_weights = [0.5, 0.3, 0.2];
    let features: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut row = one_hot(weighted_type(&type_weights, rng), 4);
            let eps: f64 = StandardNormal.sample(rng);
            row[3] = g.degree(v) as f64 / 4.0 + 0.2 * eps;
            row
        })
        .collect();
    g.with_features(features)
        .expect("feature rows match node count")
        .with_label(class)
}

/// 400 protein-style chain graphs, 240 of class 1 and 160 of class 0,
/// with 3 one-hot node types plus one continuous attribute.
pub fn proteins_like_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let mut graphs = Vec::with_capacity(400);
    for _ in 0..240 {
        graphs.push(protein_like(1, rng));
    }
    for _ in 0..160 {
        graphs.push(protein_like(0, rng));
    }
    Dataset::new("protein-chains", graphs, 2).expect("generated dataset is consistent")
}
