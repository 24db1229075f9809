//! Frustrated-cluster-loop (FCL) instances.
//!
//! Each loop is a simple cycle of the logical graph that adds `−1` to all of
//! its edges except one designated edge, which gets `+1`. The uniform
//! configuration leaves exactly one bond of every loop unsatisfied, the
//! minimum any frustrated cycle allows, so it is a ground state of the sum.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ising::{IsingInstance, Metadata, SpinConfiguration};
use crate::topology::TopologyGraph;
use crate::RNG_ALGORITHM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FclError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("loop sampling gave up after {0} rejected attempts")]
    LoopBudgetExhausted(usize),
    #[error("every regenerated instance was disconnected ({0} discards)")]
    InstanceBudgetExhausted(usize),
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FclParams {
    /// Clause-to-variable ratio; the loop count is `round(alpha · n)`.
    pub alpha: f64,
    /// Largest allowed `|J|` on any edge.
    pub rho: u32,
    /// Ruggedness cap, `R ≥ rho`. Recorded, not used by the generator.
    pub ruggedness: u32,
    pub seed: u64,
    pub max_loop_rejections: usize,
    pub max_instance_rejections: usize,
}

impl FclParams {
    pub fn new(alpha: f64, rho: u32, seed: u64) -> Self {
        FclParams {
            alpha,
            rho,
            ruggedness: rho,
            seed,
            max_loop_rejections: 1_000_000,
            max_instance_rejections: 10_000,
        }
    }

    pub fn validate(&self) -> Result<(), FclError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(FclError::InvalidParams(format!("alpha = {} must be > 0", self.alpha)));
        }
        if self.rho < 1 {
            return Err(FclError::InvalidParams("rho must be at least 1".into()));
        }
        if self.ruggedness < self.rho {
            return Err(FclError::InvalidParams(format!(
                "ruggedness R = {} below rho = {}",
                self.ruggedness, self.rho
            )));
        }
        Ok(())
    }
}

/// A simple cycle given by its node sequence; edge `k` joins `nodes[k]` and
/// `nodes[(k + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loop {
    pub nodes: Vec<usize>,
    /// Index of the antiferromagnetic edge.
    pub frustrated_edge: usize,
}

impl Loop {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges as `(min, max)` pairs in cycle order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let len = self.nodes.len();
        (0..len).map(move |k| {
            let (a, b) = (self.nodes[k], self.nodes[(k + 1) % len]);
            (a.min(b), a.max(b))
        })
    }
}

/// Samples one loop: a non-backtracking random walk from a uniform start
/// node, closed at its first self-intersection. Walks that dead-end or
/// close a cycle shorter than 4 are retried, up to `budget` attempts.
pub fn sample_loop<R: Rng>(
    adjacency: &[Vec<usize>],
    rng: &mut R,
    budget: usize,
) -> Result<Loop, FclError> {
    let n = adjacency.len();
    if n == 0 {
        return Err(FclError::EmptyGraph);
    }
    let mut position = vec![usize::MAX; n];
    let mut walk: Vec<usize> = Vec::new();
    for _ in 0..budget.max(1) {
        for &v in &walk {
            position[v] = usize::MAX;
        }
        walk.clear();
        let start = rng.gen_range(0..n);
        walk.push(start);
        position[start] = 0;
        let mut prev = usize::MAX;
        let closed = loop {
            let cur = *walk.last().unwrap();
            let options: Vec<usize> = adjacency[cur].iter().copied().filter(|&w| w != prev).collect();
            let Some(&next) = options.choose(rng) else {
                break None;
            };
            if position[next] != usize::MAX {
                break Some(position[next]);
            }
            position[next] = walk.len();
            walk.push(next);
            prev = cur;
        };
        if let Some(from) = closed {
            let nodes = walk[from..].to_vec();
            if nodes.len() >= 4 {
                let frustrated_edge = rng.gen_range(0..nodes.len());
                return Ok(Loop {
                    nodes,
                    frustrated_edge,
                });
            }
        }
    }
    Err(FclError::LoopBudgetExhausted(budget))
}

/// Random stream for instance `index` after `discards` connectivity
/// rejections.
pub fn instance_rng(seed: u64, index: u64, discards: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(discards));
    rng.set_stream(index);
    rng
}

/// Generates instance 0 of the stream defined by `params.seed`.
pub fn generate_fcl(graph: &TopologyGraph, params: &FclParams) -> Result<IsingInstance, FclError> {
    generate_fcl_indexed(graph, params, 0)
}

/// Generates instance `index` of a batch. Disconnected instances are
/// discarded and regenerated from seed `seed + k` for discard count `k`.
pub fn generate_fcl_indexed(
    graph: &TopologyGraph,
    params: &FclParams,
    index: u64,
) -> Result<IsingInstance, FclError> {
    params.validate()?;
    if graph.nodes == 0 {
        return Err(FclError::EmptyGraph);
    }
    let adjacency = graph.adjacency();
    let edge_index = graph.edge_index();
    let loops = (params.alpha * graph.nodes as f64).round() as usize;
    let rho = params.rho as i64;

    for discards in 0..=params.max_instance_rejections {
        let mut rng = instance_rng(params.seed, index, discards as u64);
        let mut j = vec![0_i64; graph.edges.len()];
        let mut rejections = 0usize;
        let mut accepted = 0usize;
        let mut touched: Vec<(usize, i64)> = Vec::new();
        while accepted < loops {
            let remaining = params.max_loop_rejections.saturating_sub(rejections);
            if remaining == 0 {
                return Err(FclError::LoopBudgetExhausted(params.max_loop_rejections));
            }
            let lp = sample_loop(&adjacency, &mut rng, remaining)
                .map_err(|_| FclError::LoopBudgetExhausted(params.max_loop_rejections))?;
            touched.clear();
            for (k, edge) in lp.edges().enumerate() {
                let delta = if k == lp.frustrated_edge { 1 } else { -1 };
                touched.push((edge_index[&edge], delta));
            }
            if touched.iter().all(|&(e, d)| (j[e] + d).abs() <= rho) {
                for &(e, d) in &touched {
                    j[e] += d;
                }
                accepted += 1;
            } else {
                rejections += 1;
            }
        }
        let couplings: Vec<(usize, usize, i64)> = graph
            .edges
            .iter()
            .zip(&j)
            .filter(|(_, &v)| v != 0)
            .map(|(&(u, v), &value)| (u, v, value))
            .collect();
        if !is_connected(graph.nodes, couplings.iter().map(|&(u, v, _)| (u, v))) {
            continue;
        }
        let mut inst = IsingInstance::from_couplings(graph.nodes, couplings);
        inst.topology = graph.kind.tag();
        inst.planted = Some(SpinConfiguration::uniform(graph.nodes));
        inst.metadata = Metadata {
            generator: Some("fcl".into()),
            params: vec![
                ("alpha".into(), params.alpha.to_string()),
                ("rho".into(), params.rho.to_string()),
                ("ruggedness".into(), params.ruggedness.to_string()),
                ("seed".into(), params.seed.to_string()),
                ("index".into(), index.to_string()),
                ("discards".into(), discards.to_string()),
                ("loops".into(), loops.to_string()),
                ("loop_rejections".into(), rejections.to_string()),
            ],
            rng_algorithm: Some(RNG_ALGORITHM.into()),
        };
        return Ok(inst);
    }
    Err(FclError::InstanceBudgetExhausted(params.max_instance_rejections))
}

/// Connectivity of the graph spanned by `edges`: spins without any
/// nonzero coupling are not part of it. An empty edge set counts as
/// disconnected.
fn is_connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut used = vec![false; n];
    let mut vertices = 0;
    let mut merges = 0;
    for (u, v) in edges {
        for x in [u, v] {
            if !used[x] {
                used[x] = true;
                vertices += 1;
            }
        }
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            merges += 1;
        }
    }
    vertices > 0 && merges + 1 == vertices
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{energy, planted_energy};
    use crate::topology::build_logical_square;

    #[test]
    fn loops_on_unit_square() {
        let g = build_logical_square(2).unwrap();
        let adj = g.adjacency();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let lp = sample_loop(&adj, &mut rng, 10).unwrap();
            let mut edges: Vec<_> = lp.edges().collect();
            edges.sort_unstable();
            assert_eq!(edges, g.edges);
        }
    }

    #[test]
    fn loops_on_grid_are_simple_cycles() {
        let g = build_logical_square(6).unwrap();
        let adj = g.adjacency();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let lp = sample_loop(&adj, &mut rng, 10).unwrap();
            assert!(lp.len() >= 4);
            let mut nodes = lp.nodes.clone();
            nodes.sort_unstable();
            nodes.dedup();
            assert_eq!(nodes.len(), lp.len());
            for (u, v) in lp.edges() {
                assert!(adj[u].contains(&v));
            }
            assert!(lp.frustrated_edge < lp.len());
        }
    }

    #[test]
    fn single_loop_instance() {
        let g = build_logical_square(2).unwrap();
        let params = FclParams::new(0.25, 3, 5);
        let inst = generate_fcl(&g, &params).unwrap();
        let mut values: Vec<i64> = inst.couplings.iter().map(|c| c.value).collect();
        values.sort_unstable();
        assert_eq!(values, vec![-1, -1, -1, 1]);
        assert_eq!(planted_energy(&inst).unwrap(), -2);
    }

    #[test]
    fn generated_instances_respect_invariants() {
        let g = build_logical_square(8).unwrap();
        for seed in 0..20 {
            let params = FclParams::new(1.0, 3, seed);
            let inst = generate_fcl(&g, &params).unwrap();
            assert!(inst.couplings.iter().all(|c| c.value.abs() <= 3 && c.value != 0));
            assert!(!inst.has_biases());
            let uniform = SpinConfiguration::uniform(inst.n);
            assert_eq!(energy(&inst, &uniform).unwrap(), inst.coupling_sum());
            assert!(is_connected(inst.n, inst.couplings.iter().map(|c| (c.i, c.j))));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let g = build_logical_square(6).unwrap();
        let params = FclParams::new(0.5, 3, 99);
        assert_eq!(generate_fcl(&g, &params), generate_fcl(&g, &params));
        let other = generate_fcl_indexed(&g, &params, 1).unwrap();
        assert_ne!(generate_fcl(&g, &params).unwrap().couplings, other.couplings);
    }

    #[test]
    fn parameter_validation() {
        let g = build_logical_square(4).unwrap();
        let mut p = FclParams::new(0.0, 3, 1);
        assert!(matches!(generate_fcl(&g, &p), Err(FclError::InvalidParams(_))));
        p.alpha = 1.0;
        p.ruggedness = 2;
        assert!(matches!(generate_fcl(&g, &p), Err(FclError::InvalidParams(_))));
        p.ruggedness = 3;
        p.rho = 0;
        assert!(matches!(generate_fcl(&g, &p), Err(FclError::InvalidParams(_))));
    }

    #[test]
    fn exhausted_budgets_are_reported() {
        // A path has no cycles: every walk dead-ends.
        let g = build_logical_square(2).unwrap();
        let path = TopologyGraph {
            nodes: 3,
            edges: vec![(0, 1), (1, 2)],
            kind: g.kind,
            coords: g.coords[..3].to_vec(),
        };
        let mut p = FclParams::new(1.0, 3, 1);
        p.max_loop_rejections = 50;
        assert_eq!(generate_fcl(&path, &p), Err(FclError::LoopBudgetExhausted(50)));

        // Two disjoint squares at rho = 1 can only take one loop each, so
        // every instance is disconnected.
        let g = build_logical_square(3).unwrap();
        let squares = TopologyGraph {
            nodes: 8,
            edges: vec![(0, 1), (0, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 7), (6, 7)],
            kind: g.kind,
            coords: g.coords[..8].to_vec(),
        };
        let mut p = FclParams::new(0.25, 1, 1);
        p.max_instance_rejections = 3;
        assert_eq!(generate_fcl(&squares, &p), Err(FclError::InstanceBudgetExhausted(3)));

        // One loop on a larger grid leaves uncoupled spins but is accepted.
        let inst = generate_fcl(&g, &FclParams::new(0.12, 1, 1)).unwrap();
        assert!(inst.couplings.len() < g.edges.len());
    }
}
