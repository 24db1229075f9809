//! Exact minimum-weight perfect matching on general graphs with integer
//! weights.

use std::collections::HashSet;

use thiserror::Error;

use crate::blossom;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("perfect matching needs an even node count, got {0}")]
    OddNodeCount(usize),
    #[error("graph has no perfect matching")]
    NoPerfectMatching,
    #[error("edge ({0}, {1}) is a self-loop or references a missing node")]
    InvalidEdge(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    ParallelEdge(usize, usize),
    #[error("edge ({0}, {1}) has negative weight")]
    NegativeWeight(usize, usize),
}

/// A simple undirected graph with nonnegative integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightedGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, i64)>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        WeightedGraph {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: i64) {
        self.edges.push((u, v, w));
    }

    pub fn validate(&self) -> Result<(), MatchingError> {
        let mut seen = HashSet::with_capacity(self.edges.len());
        for &(u, v, w) in &self.edges {
            if u == v || u >= self.nodes || v >= self.nodes {
                return Err(MatchingError::InvalidEdge(u, v));
            }
            if w < 0 {
                return Err(MatchingError::NegativeWeight(u, v));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(MatchingError::ParallelEdge(u, v));
            }
        }
        Ok(())
    }

    pub fn weight_of(&self, u: usize, v: usize) -> Option<i64> {
        self.edges
            .iter()
            .find(|&&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u))
            .map(|e| e.2)
    }
}

/// A set of node-disjoint edges, each stored as `(u, v)` with `u < v`,
/// sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub total_weight: i64,
}

impl Matching {
    /// `partner[v]` for every node of an `n`-node graph.
    pub fn partners(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for &(u, v) in &self.pairs {
            out[u] = Some(v);
            out[v] = Some(u);
        }
        out
    }
}

/// Linear-programming dual solution proving a perfect matching optimal.
///
/// Any edge whose [`reduced_cost`](Self::reduced_cost) is nonnegative can be
/// added to the solved graph without changing the optimum, which is how a
/// matching computed on a sparse candidate graph is certified for a larger
/// one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingCertificate {
    offset: i64,
    dual: Vec<i64>,
    parent: Vec<Option<usize>>,
    min_vertex_dual: i64,
}

impl MatchingCertificate {
    /// Twice the reduced cost of a prospective edge `(u, v)` of weight `w`.
    pub fn reduced_cost(&self, u: usize, v: usize, w: i64) -> i64 {
        let mut s = self.dual[u] + self.dual[v] - 2 * (self.offset - w);
        let (cu, cv) = (self.chain(u), self.chain(v));
        for (a, b) in cu.iter().rev().zip(cv.iter().rev()) {
            if a != b {
                break;
            }
            s += 2 * self.dual[*a];
        }
        s
    }

    /// Every edge at `u` with weight `>= safe_weight(u)` has nonnegative
    /// reduced cost, whatever its other endpoint.
    pub fn safe_weight(&self, u: usize) -> i64 {
        let twice = 2 * self.offset - self.dual[u] - self.min_vertex_dual;
        twice.div_euclid(2) + twice.rem_euclid(2)
    }

    fn chain(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut b = self.parent[v];
        while let Some(p) = b {
            out.push(p);
            b = self.parent[p];
        }
        out
    }
}

/// Minimum-weight perfect matching. Deterministic for a fixed edge order.
pub fn min_weight_perfect_matching(g: &WeightedGraph) -> Result<Matching, MatchingError> {
    min_weight_perfect_matching_certified(g).map(|(m, _)| m)
}

/// [`min_weight_perfect_matching`] plus the dual certificate of optimality.
pub fn min_weight_perfect_matching_certified(
    g: &WeightedGraph,
) -> Result<(Matching, MatchingCertificate), MatchingError> {
    if g.nodes % 2 == 1 {
        return Err(MatchingError::OddNodeCount(g.nodes));
    }
    g.validate()?;
    // Perfect matchings all have n/2 edges, so maximizing Σ(C − w) over
    // maximum-cardinality matchings minimizes Σ w.
    let c = g.edges.iter().map(|e| e.2).max().unwrap_or(0);
    let flipped: Vec<(usize, usize, i64)> =
        g.edges.iter().map(|&(u, v, w)| (u, v, c - w)).collect();
    let solution = blossom::solve_with_duals(g.nodes, &flipped, true);
    if solution.mate.iter().any(Option::is_none) {
        return Err(MatchingError::NoPerfectMatching);
    }
    let mut pairs = Vec::with_capacity(g.nodes / 2);
    let mut total_weight = 0;
    // Map each matched pair back to its edge weight.
    let mut weight = std::collections::HashMap::with_capacity(g.edges.len());
    for &(u, v, w) in &g.edges {
        weight.insert((u.min(v), u.max(v)), w);
    }
    for (u, m) in solution.mate.iter().enumerate() {
        let v = m.expect("checked above");
        if u < v {
            pairs.push((u, v));
            total_weight += weight[&(u, v)];
        }
    }
    let m = Matching {
        pairs,
        total_weight,
    };
    debug_assert!(verify_matching(g, &m));
    let certificate = MatchingCertificate {
        offset: c,
        min_vertex_dual: solution.dual[..g.nodes].iter().copied().min().unwrap_or(0),
        dual: solution.dual,
        parent: solution.parent,
    };
    Ok((m, certificate))
}

/// True iff `m` is a perfect matching of `g` using existing edges and its
/// recorded weight is the sum of the selected edge weights.
pub fn verify_matching(g: &WeightedGraph, m: &Matching) -> bool {
    if m.pairs.len() * 2 != g.nodes {
        return false;
    }
    let mut covered = vec![false; g.nodes];
    let mut weight = 0;
    for &(u, v) in &m.pairs {
        if u >= g.nodes || v >= g.nodes || u == v || covered[u] || covered[v] {
            return false;
        }
        covered[u] = true;
        covered[v] = true;
        match g.weight_of(u, v) {
            Some(w) => weight += w,
            None => return false,
        }
    }
    weight == m.total_weight
}
