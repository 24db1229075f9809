//! Chimera graphs, the logical square lattice obtained by contracting each
//! K₄,₄ cell, and the anticluster lattice obtained by contracting the
//! couplers between cells instead.
//!
//! Chimera node ids follow `8·(r·c + s) + 4·p + k` for cell row `r`, cell
//! column `s`, partition `p` (0 = A, 1 = B) and slot `k`. A-partition qubits
//! couple vertically (same slot, rows `r` and `r+1`), B-partition qubits
//! couple horizontally (same slot, columns `s` and `s+1`).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ising::{Coupling, Fixed, IsingInstance, TopologyTag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("lattice size must be at least 1")]
    EmptyLattice,
    #[error("instance topology {found} does not match {expected}")]
    WrongTopology { expected: String, found: String },
    #[error("logical coupling {value} on ({u}, {v}) exceeds the physical range")]
    CouplingOutOfRange { u: usize, v: usize, value: String },
    #[error("instance has nonzero biases")]
    NonzeroBias,
    #[error("intra-pair coupling {0} outside [-1, 0)")]
    IntraPairOutOfRange(String),
    #[error("coupling ({u}, {v}) is not an edge of the target lattice")]
    NotAnEdge { u: usize, v: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Chimera(usize),
    LogicalSquare(usize),
    Anticluster(usize),
}

impl TopologyKind {
    pub fn tag(self) -> TopologyTag {
        match self {
            TopologyKind::Chimera(c) => TopologyTag::Chimera(c),
            TopologyKind::LogicalSquare(c) => TopologyTag::LogicalSquare(c),
            TopologyKind::Anticluster(c) => TopologyTag::Anticluster(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainDirection {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeCoord {
    Chimera {
        row: usize,
        col: usize,
        partition: Partition,
        slot: usize,
    },
    Square {
        row: usize,
        col: usize,
    },
    /// A run of `len` (1 or 2) consecutive qubits of one same-slot chain,
    /// starting at cell index `start` along the chain. `line` is the cell
    /// column for vertical chains and the cell row for horizontal ones.
    Anticluster {
        direction: ChainDirection,
        line: usize,
        slot: usize,
        start: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyGraph {
    pub nodes: usize,
    /// Sorted, with `u < v`.
    pub edges: Vec<(usize, usize)>,
    pub kind: TopologyKind,
    pub coords: Vec<NodeCoord>,
}

impl TopologyGraph {
    /// Neighbor lists sorted by index.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Degree → number of nodes with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for d in self.degrees() {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist
    }

    pub fn edge_index(&self) -> std::collections::HashMap<(usize, usize), usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| ((u, v), k))
            .collect()
    }

    /// Edge-list export: node count, then one `u v` line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = format!("{}\n", self.nodes);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Physical → logical assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionMap {
    pub logical_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ContractionMap {
    fn from_members(physical: usize, members: Vec<Vec<usize>>) -> Self {
        let mut logical_of = vec![usize::MAX; physical];
        for (q, list) in members.iter().enumerate() {
            for &p in list {
                logical_of[p] = q;
            }
        }
        ContractionMap { logical_of, members }
    }

    /// True when every physical node belongs to exactly one logical node.
    pub fn is_partition(&self) -> bool {
        let mut count = vec![0usize; self.logical_of.len()];
        for (q, list) in self.members.iter().enumerate() {
            for &p in list {
                if p >= count.len() || self.logical_of[p] != q {
                    return false;
                }
                count[p] += 1;
            }
        }
        count.iter().all(|&c| c == 1)
    }
}

pub fn chimera_index(c: usize, row: usize, col: usize, partition: Partition, slot: usize) -> usize {
    let p = match partition {
        Partition::A => 0,
        Partition::B => 1,
    };
    8 * (row * c + col) + 4 * p + slot
}

pub fn build_chimera(c: usize) -> Result<TopologyGraph, TopologyError> {
    if c == 0 {
        return Err(TopologyError::EmptyLattice);
    }
    let mut coords = Vec::with_capacity(8 * c * c);
    for row in 0..c {
        for col in 0..c {
            for partition in [Partition::A, Partition::B] {
                for slot in 0..4 {
                    coords.push(NodeCoord::Chimera {
                        row,
                        col,
                        partition,
                        slot,
                    });
                }
            }
        }
    }
    let mut edges = Vec::with_capacity(16 * c * c + 8 * c * (c - 1));
    for row in 0..c {
        for col in 0..c {
            for a in 0..4 {
                for b in 0..4 {
                    edges.push((
                        chimera_index(c, row, col, Partition::A, a),
                        chimera_index(c, row, col, Partition::B, b),
                    ));
                }
            }
            for k in 0..4 {
                if row + 1 < c {
                    edges.push((
                        chimera_index(c, row, col, Partition::A, k),
                        chimera_index(c, row + 1, col, Partition::A, k),
                    ));
                }
                if col + 1 < c {
                    edges.push((
                        chimera_index(c, row, col, Partition::B, k),
                        chimera_index(c, row, col + 1, Partition::B, k),
                    ));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(TopologyGraph {
        nodes: 8 * c * c,
        edges,
        kind: TopologyKind::Chimera(c),
        coords,
    })
}

pub fn build_logical_square(c: usize) -> Result<TopologyGraph, TopologyError> {
    if c == 0 {
        return Err(TopologyError::EmptyLattice);
    }
    let mut edges = Vec::with_capacity(2 * c * (c - 1));
    let mut coords = Vec::with_capacity(c * c);
    for row in 0..c {
        for col in 0..c {
            let v = row * c + col;
            coords.push(NodeCoord::Square { row, col });
            if col + 1 < c {
                edges.push((v, v + 1));
            }
            if row + 1 < c {
                edges.push((v, v + c));
            }
        }
    }
    edges.sort_unstable();
    Ok(TopologyGraph {
        nodes: c * c,
        edges,
        kind: TopologyKind::LogicalSquare(c),
        coords,
    })
}

/// Maps every qubit of Chimera cell `(r, s)` to square-lattice node `r·c + s`.
pub fn cell_contraction(c: usize) -> Result<ContractionMap, TopologyError> {
    if c == 0 {
        return Err(TopologyError::EmptyLattice);
    }
    let members = (0..c * c).map(|q| (8 * q..8 * q + 8).collect()).collect();
    Ok(ContractionMap::from_members(8 * c * c, members))
}

/// Builds the Chimera instance whose cells are locked ferromagnetically and
/// whose inter-cell couplers each carry a quarter of the logical coupling.
pub fn expand_logical_to_chimera(logical: &IsingInstance) -> Result<IsingInstance, TopologyError> {
    let TopologyTag::LogicalSquare(c) = logical.topology else {
        return Err(TopologyError::WrongTopology {
            expected: "logical_square".into(),
            found: logical.topology.to_string(),
        });
    };
    if logical.has_biases() {
        return Err(TopologyError::NonzeroBias);
    }
    // J/4 needs two more decimal digits at most.
    let scale = logical.scale + 2;
    let limit = 4 * logical.denominator();
    let mut couplings = Vec::with_capacity(16 * c * c + 8 * c * (c - 1));
    let minus_one = -(10_i64.pow(scale));
    for cell in 0..c * c {
        let (row, col) = (cell / c, cell % c);
        for a in 0..4 {
            for b in 0..4 {
                couplings.push(Coupling {
                    i: chimera_index(c, row, col, Partition::A, a),
                    j: chimera_index(c, row, col, Partition::B, b),
                    value: minus_one,
                });
            }
        }
    }
    for cp in &logical.couplings {
        if cp.value.abs() > limit {
            return Err(TopologyError::CouplingOutOfRange {
                u: cp.i,
                v: cp.j,
                value: logical.format_value(cp.value),
            });
        }
        let (u, v) = (cp.i.min(cp.j), cp.i.max(cp.j));
        let (ru, su, rv, sv) = (u / c, u % c, v / c, v % c);
        let partition = if su == sv && rv == ru + 1 {
            Partition::A
        } else if ru == rv && sv == su + 1 {
            Partition::B
        } else {
            return Err(TopologyError::NotAnEdge { u, v });
        };
        let share = cp.value * 25; // (value / 4) at two extra digits
        for k in 0..4 {
            couplings.push(Coupling {
                i: chimera_index(c, ru, su, partition, k),
                j: chimera_index(c, rv, sv, partition, k),
                value: share,
            });
        }
    }
    couplings.sort_by_key(|cp| (cp.i, cp.j));
    let mut out = IsingInstance {
        n: 8 * c * c,
        couplings,
        biases: Vec::new(),
        scale,
        topology: TopologyTag::Chimera(c),
        planted: logical.planted.as_ref().map(|p| {
            crate::ising::SpinConfiguration::new(
                (0..8 * c * c).map(|q| p.spins()[q / 8]).collect(),
            )
            .expect("planted spins are ±1")
        }),
        metadata: logical.metadata.clone(),
    };
    out.canonicalize_scale();
    Ok(out)
}

/// Sums the inter-cell couplers of a Chimera instance back onto the logical
/// square lattice. Intra-cell couplings are dropped.
pub fn contract_chimera_to_logical(physical: &IsingInstance) -> Result<IsingInstance, TopologyError> {
    let TopologyTag::Chimera(c) = physical.topology else {
        return Err(TopologyError::WrongTopology {
            expected: "chimera".into(),
            found: physical.topology.to_string(),
        });
    };
    let mut sums: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for cp in &physical.couplings {
        let (cu, cv) = (cp.i / 8, cp.j / 8);
        if cu != cv {
            *sums.entry((cu.min(cv), cu.max(cv))).or_insert(0) += cp.value;
        }
    }
    let mut out = IsingInstance::from_couplings(
        c * c,
        sums.into_iter().map(|((u, v), value)| (u, v, value)),
    );
    out.scale = physical.scale;
    out.topology = TopologyTag::LogicalSquare(c);
    out.canonicalize_scale();
    Ok(out)
}

/// Anticluster lattice: each same-slot chain of `c` qubits is cut into
/// adjacent pairs from its low end, a leftover end qubit stays single.
pub fn build_anticluster(c: usize) -> Result<(TopologyGraph, ContractionMap), TopologyError> {
    let chimera = build_chimera(c)?;
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut coords = Vec::new();
    for (direction, partition) in [
        (ChainDirection::Vertical, Partition::A),
        (ChainDirection::Horizontal, Partition::B),
    ] {
        for line in 0..c {
            for slot in 0..4 {
                let qubit = |pos: usize| match direction {
                    ChainDirection::Vertical => chimera_index(c, pos, line, partition, slot),
                    ChainDirection::Horizontal => chimera_index(c, line, pos, partition, slot),
                };
                let mut start = 0;
                while start < c {
                    let len = if start + 1 < c { 2 } else { 1 };
                    members.push((start..start + len).map(qubit).collect());
                    coords.push(NodeCoord::Anticluster {
                        direction,
                        line,
                        slot,
                        start,
                        len,
                    });
                    start += len;
                }
            }
        }
    }
    let map = ContractionMap::from_members(chimera.nodes, members);
    let edges: BTreeSet<(usize, usize)> = chimera
        .edges
        .iter()
        .map(|&(u, v)| (map.logical_of[u], map.logical_of[v]))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    let graph = TopologyGraph {
        nodes: map.members.len(),
        edges: edges.into_iter().collect(),
        kind: TopologyKind::Anticluster(c),
        coords,
    };
    Ok((graph, map))
}

/// Logical node count of `build_anticluster(c)`: `4c(c+1)` for odd `c`,
/// `4c²` for even `c`.
pub fn anticluster_node_count(c: usize) -> usize {
    8 * c * c.div_ceil(2)
}

/// Places an anticluster instance on the physical Chimera graph: pairs get
/// the ferromagnetic `intra_pair` coupler, each logical coupling sits on the
/// single physical edge that realises it.
pub fn expand_anticluster_to_chimera(
    logical: &IsingInstance,
    intra_pair: Fixed,
) -> Result<IsingInstance, TopologyError> {
    let TopologyTag::Anticluster(c) = logical.topology else {
        return Err(TopologyError::WrongTopology {
            expected: "anticluster".into(),
            found: logical.topology.to_string(),
        });
    };
    if intra_pair.num >= 0 || intra_pair.to_f64() < -1.0 {
        return Err(TopologyError::IntraPairOutOfRange(intra_pair.to_string()));
    }
    if logical.has_biases() {
        return Err(TopologyError::NonzeroBias);
    }
    let chimera = build_chimera(c)?;
    let (_, map) = build_anticluster(c)?;
    let scale = logical.scale.max(intra_pair.scale);
    let lift = |v: i64| v * 10_i64.pow(scale - logical.scale);
    let intra = intra_pair.rescaled(scale).expect("scale covers intra-pair value");
    let one = 10_i64.pow(scale);

    // Logical edge → realising physical edge (unique in this lattice).
    let mut realisation: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for &(u, v) in &chimera.edges {
        let (a, b) = (map.logical_of[u], map.logical_of[v]);
        if a != b {
            realisation.insert((a.min(b), a.max(b)), (u, v));
        }
    }
    let mut couplings = Vec::new();
    for list in &map.members {
        if let [p, q] = list[..] {
            couplings.push(Coupling {
                i: p.min(q),
                j: p.max(q),
                value: intra,
            });
        }
    }
    for cp in logical.couplings.iter().filter(|cp| cp.value != 0) {
        let key = (cp.i.min(cp.j), cp.i.max(cp.j));
        let &(u, v) = realisation
            .get(&key)
            .ok_or(TopologyError::NotAnEdge { u: key.0, v: key.1 })?;
        let value = lift(cp.value);
        if value.abs() > one {
            return Err(TopologyError::CouplingOutOfRange {
                u: key.0,
                v: key.1,
                value: logical.format_value(cp.value),
            });
        }
        couplings.push(Coupling { i: u, j: v, value });
    }
    couplings.sort_by_key(|cp| (cp.i, cp.j));
    let mut out = IsingInstance {
        n: chimera.nodes,
        couplings,
        biases: Vec::new(),
        scale,
        topology: TopologyTag::Chimera(c),
        planted: None,
        metadata: logical.metadata.clone(),
    };
    out.canonicalize_scale();
    Ok(out)
}

/// A lattice family without its size, as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyFamily {
    Chimera,
    LogicalSquare,
    Anticluster,
}

impl TopologyFamily {
    pub fn name(self) -> &'static str {
        match self {
            TopologyFamily::Chimera => "chimera",
            TopologyFamily::LogicalSquare => "logical-square",
            TopologyFamily::Anticluster => "anticluster",
        }
    }

    /// Builds the lattice with `c` unit cells per side.
    pub fn build(self, c: usize) -> Result<TopologyGraph, TopologyError> {
        match self {
            TopologyFamily::Chimera => build_chimera(c),
            TopologyFamily::LogicalSquare => build_logical_square(c),
            TopologyFamily::Anticluster => build_anticluster(c).map(|(g, _)| g),
        }
    }
}

impl std::str::FromStr for TopologyFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "chimera" => Ok(TopologyFamily::Chimera),
            "logical-square" | "square" => Ok(TopologyFamily::LogicalSquare),
            "anticluster" => Ok(TopologyFamily::Anticluster),
            other => Err(format!("unknown topology {other:?}")),
        }
    }
}
