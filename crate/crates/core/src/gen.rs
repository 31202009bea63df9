//! Deterministic instance generators used by the command-line tools and the
//! test suites.
//!
//! Two families: generic valid variograms from random point configurations
//! (squared distances of `d` independent Gaussian points in `d-1` dimensions
//! are strictly conditionally negative definite almost surely), and M-matrix
//! models from weighted Laplacians of random connected graphs, which carry
//! exact structural zeros for planted conditional independencies.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::graph::MarkovGraph;
use crate::linalg::SymMatrix;
use crate::model::{validate_variogram, variogram_from_precision, Variogram};
use crate::tol::Tol;

/// Valid variogram from a random point configuration; deterministic per
/// `(d, seed)`. Degenerate draws (probability zero, tolerance permitting)
/// advance the stream and retry.
pub fn random_variogram(d: usize, seed: u64) -> Variogram {
    assert!(d >= 2);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let coords = DMatrix::from_fn(d, d - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut gamma = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let diff = coords.row(i) - coords.row(j);
                let sq = diff.norm_squared();
                gamma[(i, j)] = sq;
                gamma[(j, i)] = sq;
            }
        }
        if let Ok(v) = validate_variogram(&gamma, Tol::default()) {
            return v;
        }
    }
    unreachable!("random point configurations are affinely independent almost surely")
}

/// Random connected simple graph: a random spanning tree plus each remaining
/// edge independently with probability `extra_edge_prob`.
pub fn random_connected_graph(d: usize, seed: u64, extra_edge_prob: f64) -> MarkovGraph {
    assert!(d >= 2);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    // random attachment tree over a random vertex order
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    for pos in 1..d {
        let anchor = order[rng.gen_range(0..pos)];
        edges.push((order[pos].min(anchor), order[pos].max(anchor)));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if !edges.contains(&(i, j)) && rng.gen_bool(extra_edge_prob) {
                edges.push((i, j));
            }
        }
    }
    MarkovGraph::new(d, &edges).expect("construction yields a simple graph")
}

/// Weighted Laplacian of a graph with edge weights uniform in `[0.2, 2]`;
/// an M-matrix precision with kernel span(1) and exact structural zeros.
pub fn random_laplacian(g: &MarkovGraph, seed: u64) -> SymMatrix {
    let d = g.vertex_count();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut lap = DMatrix::zeros(d, d);
    for &(i, j) in g.edges() {
        let w = rng.gen_range(0.2..2.0);
        lap[(i, j)] = -w;
        lap[(j, i)] = -w;
        lap[(i, i)] += w;
        lap[(j, j)] += w;
    }
    SymMatrix::from_upper(lap).expect("square")
}

/// M-matrix model with planted zeros: the variogram of a random weighted
/// Laplacian on a random connected graph, together with the graph.
pub fn random_emtp2_variogram(d: usize, seed: u64) -> (Variogram, MarkovGraph) {
    let g = random_connected_graph(d, seed, 0.35);
    let lap = random_laplacian(&g, seed.wrapping_add(1));
    let v = variogram_from_precision(&lap, Tol::default())
        .expect("connected weighted Laplacians are valid precision matrices");
    (v, g)
}
