//! Simple undirected graphs on `{0, .., d-1}`: separation queries and
//! exhaustive spanning-tree enumeration.

use thiserror::Error;

use crate::index_set::IndexSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {v} out of range for {d} vertices")]
    VertexOutOfRange { v: usize, d: usize },
    #[error("edge ({i},{j}) is a self-loop or duplicate")]
    BadEdge { i: usize, j: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("spanning-tree enumeration limited to {max} vertices, got {got}")]
    TooManyVertices { max: usize, got: usize },
}

/// Undirected simple graph with optional edge weights (conventionally
/// `w(ij) = -Theta_ij` when extracted from a precision matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovGraph {
    d: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl MarkovGraph {
    pub fn new(d: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::with_weights(d, edges, &vec![1.0; edges.len()])
    }

    pub fn with_weights(
        d: usize,
        edges: &[(usize, usize)],
        weights: &[f64],
    ) -> Result<Self, GraphError> {
        assert_eq!(edges.len(), weights.len(), "one weight per edge");
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        let mut w = Vec::with_capacity(edges.len());
        for (&(a, b), &wt) in edges.iter().zip(weights) {
            if a >= d {
                return Err(GraphError::VertexOutOfRange { v: a, d });
            }
            if b >= d {
                return Err(GraphError::VertexOutOfRange { v: b, d });
            }
            if a == b {
                return Err(GraphError::BadEdge { i: a, j: b });
            }
            let e = (a.min(b), a.max(b));
            if norm.contains(&e) {
                return Err(GraphError::BadEdge { i: e.0, j: e.1 });
            }
            norm.push(e);
            w.push(wt);
        }
        let mut order: Vec<usize> = (0..norm.len()).collect();
        order.sort_by_key(|&k| norm[k]);
        Ok(Self {
            d,
            edges: order.iter().map(|&k| norm[k]).collect(),
            weights: order.iter().map(|&k| w[k]).collect(),
        })
    }

    pub fn cycle(d: usize) -> Self {
        let edges: Vec<_> = (0..d).map(|i| (i, (i + 1) % d)).collect();
        Self::new(d, &edges).expect("cycle edges are simple")
    }

    pub fn path(d: usize) -> Self {
        let edges: Vec<_> = (0..d - 1).map(|i| (i, i + 1)).collect();
        Self::new(d, &edges).expect("path edges are simple")
    }

    pub fn complete(d: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                edges.push((i, j));
            }
        }
        Self::new(d, &edges).expect("complete edges are simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        let e = (i.min(j), i.max(j));
        self.edges.binary_search(&e).is_ok()
    }

    /// Graph with one edge removed.
    pub fn without_edge(&self, i: usize, j: usize) -> Self {
        let e = (i.min(j), i.max(j));
        let kept: Vec<usize> = (0..self.edges.len())
            .filter(|&k| self.edges[k] != e)
            .collect();
        Self {
            d: self.d,
            edges: kept.iter().map(|&k| self.edges[k]).collect(),
            weights: kept.iter().map(|&k| self.weights[k]).collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.d == 0 {
            return true;
        }
        let reached = self.reachable_from(&[0], &IndexSet::empty());
        reached.iter().all(|&r| r)
    }

    /// Vertices reachable from `starts` after deleting the vertices in `cut`.
    fn reachable_from(&self, starts: &[usize], cut: &IndexSet) -> Vec<bool> {
        let mut reached = vec![false; self.d];
        let mut queue: Vec<usize> = Vec::new();
        for &s in starts {
            if !cut.contains(s) && !reached[s] {
                reached[s] = true;
                queue.push(s);
            }
        }
        while let Some(u) = queue.pop() {
            for &(a, b) in &self.edges {
                let other = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !cut.contains(other) && !reached[other] {
                    reached[other] = true;
                    queue.push(other);
                }
            }
        }
        reached
    }

    /// Whether `c` separates `a` from `b`: deleting `c` leaves no path from
    /// any vertex of `a` to any vertex of `b`.
    pub fn separates(&self, a: &IndexSet, b: &IndexSet, c: &IndexSet) -> bool {
        let starts: Vec<usize> = a.iter().collect();
        let reached = self.reachable_from(&starts, c);
        !b.iter().any(|v| reached[v])
    }

    /// All spanning trees, as sorted edge lists. Exhaustive over edge
    /// subsets, so restricted to at most 8 vertices.
    pub fn spanning_trees(&self) -> Result<Vec<Vec<(usize, usize)>>, GraphError> {
        const MAX: usize = 8;
        if self.d > MAX {
            return Err(GraphError::TooManyVertices {
                max: MAX,
                got: self.d,
            });
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        if self.d <= 1 {
            return Ok(vec![Vec::new()]);
        }
        let need = self.d - 1;
        let m = self.edges.len();
        let mut trees = Vec::new();
        let mut choice: Vec<usize> = (0..need).collect();
        loop {
            if spans(
                self.d,
                &choice.iter().map(|&k| self.edges[k]).collect::<Vec<_>>(),
            ) {
                trees.push(choice.iter().map(|&k| self.edges[k]).collect());
            }
            // next combination of `need` edge indices out of m
            let mut i = need;
            loop {
                if i == 0 {
                    return Ok(trees);
                }
                i -= 1;
                if choice[i] != i + m - need {
                    break;
                }
            }
            choice[i] += 1;
            for j in (i + 1)..need {
                choice[j] = choice[j - 1] + 1;
            }
        }
    }
}

/// Do `d-1` edges form a spanning tree on `d` vertices?
fn spans(d: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merged = 0;
    for &(a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra == rb {
            return false; // cycle
        }
        parent[ra] = rb;
        merged += 1;
    }
    merged == d - 1
}
