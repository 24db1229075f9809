//! Planarity testing and combinatorial embeddings.
//!
//! The test is the left-right (LR) criterion of de Fraysseix and
//! Rosenstiehl in Brandes' formulation: an orientation DFS computes
//! lowpoints and a nesting order, a testing DFS maintains a stack of
//! conflict pairs of return-edge intervals, and the side assignments found
//! along the way yield a rotation system for the embedding.
//!
//! Faces of an embedding are traced on darts: edge `e = (u, v)` owns dart
//! `2e` (u → v) and dart `2e + 1` (v → u).

use std::collections::HashMap;

/// Cyclic neighbor order per node. All lists share one orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation(pub Vec<Vec<usize>>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Faces {
    /// Each face as its cyclic dart sequence.
    pub faces: Vec<Vec<usize>>,
    /// Face to the traversal side of every dart.
    pub dart_face: Vec<usize>,
}

/// Traces the faces of a rotation system. From dart `v → w` the walk
/// continues with `w → x`, `x` the neighbor preceding `v` in `w`'s rotation.
///
/// `edges` must be simple; every edge must appear in both endpoint
/// rotations.
pub fn trace_faces(edges: &[(usize, usize)], rotation: &Rotation) -> Faces {
    let mut dart_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * edges.len());
    for (e, &(u, v)) in edges.iter().enumerate() {
        dart_of.insert((u, v), 2 * e);
        dart_of.insert((v, u), 2 * e + 1);
    }
    let mut position: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * edges.len());
    for (v, list) in rotation.0.iter().enumerate() {
        for (k, &w) in list.iter().enumerate() {
            position.insert((v, w), k);
        }
    }
    let head = |d: usize| {
        let (u, v) = edges[d / 2];
        if d.is_multiple_of(2) {
            (u, v)
        } else {
            (v, u)
        }
    };
    let mut dart_face = vec![usize::MAX; 2 * edges.len()];
    let mut faces = Vec::new();
    for start in 0..2 * edges.len() {
        if dart_face[start] != usize::MAX {
            continue;
        }
        let id = faces.len();
        let mut face = Vec::new();
        let mut d = start;
        loop {
            dart_face[d] = id;
            face.push(d);
            let (v, w) = head(d);
            let list = &rotation.0[w];
            let k = position[&(w, v)];
            let x = list[(k + list.len() - 1) % list.len()];
            d = dart_of[&(w, x)];
            if d == start {
                break;
            }
        }
        faces.push(face);
    }
    Faces { faces, dart_face }
}

/// Simple-graph cleanup: drops loops and duplicate edges, orders pairs.
fn simple_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    planar_embedding(n, edges).is_some()
}

/// Rotation system of a planar embedding, or `None` if the graph is not
/// planar.
pub fn planar_embedding(n: usize, edges: &[(usize, usize)]) -> Option<Rotation> {
    let edges = simple_edges(edges);
    if n > 2 && edges.len() > 3 * n - 6 {
        return None;
    }
    // The DFS passes recurse once per tree level.
    if n > 2048 {
        std::thread::scope(|s| {
            std::thread::Builder::new()
                .stack_size(64 + n * 2048)
                .spawn_scoped(s, || LrState::new(n, &edges).run())
                .expect("spawn planarity worker")
                .join()
                .expect("planarity worker panicked")
        })
    } else {
        LrState::new(n, &edges).run()
    }
}

/// An edge-minimal nonplanar subgraph (a subdivision of K₅ or K₃,₃), or
/// `None` for planar input.
pub fn kuratowski_witness(n: usize, edges: &[(usize, usize)]) -> Option<Vec<(usize, usize)>> {
    let mut current = simple_edges(edges);
    if is_planar(n, &current) {
        return None;
    }
    let mut k = 0;
    while k < current.len() {
        let removed = current.remove(k);
        if is_planar(n, &current) {
            current.insert(k, removed);
            k += 1;
        }
    }
    Some(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Interval {
    low: Option<usize>,
    high: Option<usize>,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState<'a> {
    n: usize,
    edges: &'a [(usize, usize)],
    adj: Vec<Vec<usize>>,
    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<usize>>,
    // Oriented edges: id → (tail, head).
    oriented: Vec<(usize, usize)>,
    oriented_id: HashMap<(usize, usize), usize>,
    out: Vec<Vec<usize>>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting_depth: Vec<i64>,
    ordered: Vec<Vec<usize>>,
    reference: Vec<Option<usize>>,
    side: Vec<i64>,
    stack: Vec<ConflictPair>,
    stack_bottom: Vec<Option<ConflictPair>>,
    lowpt_edge: Vec<Option<usize>>,
    roots: Vec<usize>,
    // Embedding: per node, neighbor → (cw, ccw).
    rot: Vec<HashMap<usize, (usize, usize)>>,
    first_nbr: Vec<Option<usize>>,
    left_ref: Vec<usize>,
    right_ref: Vec<usize>,
}

impl<'a> LrState<'a> {
    fn new(n: usize, edges: &'a [(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let m = edges.len();
        LrState {
            n,
            edges,
            adj,
            height: vec![None; n],
            parent_edge: vec![None; n],
            oriented: Vec::with_capacity(m),
            oriented_id: HashMap::with_capacity(m),
            out: vec![Vec::new(); n],
            lowpt: Vec::with_capacity(m),
            lowpt2: Vec::with_capacity(m),
            nesting_depth: Vec::with_capacity(m),
            ordered: vec![Vec::new(); n],
            reference: vec![None; m],
            side: vec![1; m],
            stack: Vec::new(),
            stack_bottom: vec![None; m],
            lowpt_edge: vec![None; m],
            roots: Vec::new(),
            rot: vec![HashMap::new(); n],
            first_nbr: vec![None; n],
            left_ref: vec![usize::MAX; n],
            right_ref: vec![usize::MAX; n],
        }
    }

    fn run(mut self) -> Option<Rotation> {
        let _ = self.edges;
        for v in 0..self.n {
            if self.height[v].is_none() {
                self.height[v] = Some(0);
                self.roots.push(v);
                self.dfs_orientation(v);
            }
        }
        for v in 0..self.n {
            let mut list = self.out[v].clone();
            list.sort_by_key(|&e| self.nesting_depth[e]);
            self.ordered[v] = list;
        }
        for r in self.roots.clone() {
            if !self.dfs_testing(r) {
                return None;
            }
        }
        for e in 0..self.oriented.len() {
            let s = self.sign(e);
            self.nesting_depth[e] *= s;
        }
        for v in 0..self.n {
            let mut list = self.out[v].clone();
            list.sort_by_key(|&e| self.nesting_depth[e]);
            self.ordered[v] = list;
            let mut previous: Option<usize> = None;
            for k in 0..self.ordered[v].len() {
                let w = self.oriented[self.ordered[v][k]].1;
                self.add_half_edge_cw(v, w, previous);
                previous = Some(w);
            }
        }
        for r in self.roots.clone() {
            self.dfs_embedding(r);
        }
        let mut lists = Vec::with_capacity(self.n);
        for v in 0..self.n {
            let mut list = Vec::with_capacity(self.rot[v].len());
            if let Some(first) = self.first_nbr[v] {
                let mut w = first;
                loop {
                    list.push(w);
                    w = self.rot[v][&w].0;
                    if w == first {
                        break;
                    }
                }
            }
            debug_assert_eq!(list.len(), self.adj[v].len());
            lists.push(list);
        }
        Some(Rotation(lists))
    }

    fn dfs_orientation(&mut self, v: usize) {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        for idx in 0..self.adj[v].len() {
            let w = self.adj[v][idx];
            if self.oriented_id.contains_key(&(v, w)) || self.oriented_id.contains_key(&(w, v)) {
                continue;
            }
            let vw = self.oriented.len();
            self.oriented.push((v, w));
            self.oriented_id.insert((v, w), vw);
            self.out[v].push(vw);
            self.lowpt.push(hv);
            self.lowpt2.push(hv);
            self.nesting_depth.push(0);
            match self.height[w] {
                None => {
                    self.parent_edge[w] = Some(vw);
                    self.height[w] = Some(hv + 1);
                    self.dfs_orientation(w);
                }
                Some(hw) => self.lowpt[vw] = hw,
            }
            self.nesting_depth[vw] = 2 * self.lowpt[vw] as i64;
            if self.lowpt2[vw] < hv {
                self.nesting_depth[vw] += 1;
            }
            if let Some(e) = e {
                if self.lowpt[vw] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[vw]);
                    self.lowpt[e] = self.lowpt[vw];
                } else if self.lowpt[vw] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[vw]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[vw]);
                }
            }
        }
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        match i.high {
            Some(h) if !i.is_empty() => self.lowpt[h] > self.lowpt[b],
            _ => false,
        }
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        if p.left.is_empty() {
            return self.lowpt[p.right.low.unwrap()];
        }
        if p.right.is_empty() {
            return self.lowpt[p.left.low.unwrap()];
        }
        self.lowpt[p.left.low.unwrap()].min(self.lowpt[p.right.low.unwrap()])
    }

    fn dfs_testing(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        let ordered = self.ordered[v].clone();
        for (idx, &ei) in ordered.iter().enumerate() {
            let w = self.oriented[ei].1;
            self.stack_bottom[ei] = self.stack.last().copied();
            if Some(ei) == self.parent_edge[w] {
                if !self.dfs_testing(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = Some(ei);
                self.stack.push(ConflictPair {
                    left: Interval::default(),
                    right: Interval {
                        low: Some(ei),
                        high: Some(ei),
                    },
                });
            }
            if self.lowpt[ei] < hv {
                if idx == 0 {
                    if let Some(e) = e {
                        self.lowpt_edge[e] = self.lowpt_edge[ei];
                    }
                } else if !self.add_constraints(ei, e.expect("non-root has parent edge")) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            let u = self.oriented[e].0;
            self.remove_back_edges(e);
            if self.lowpt[e] < self.height[u].unwrap() {
                let top = *self.stack.last().expect("return edges on stack");
                let (hl, hr) = (top.left.high, top.right.high);
                self.reference[e] = match (hl, hr) {
                    (Some(l), None) => Some(l),
                    (Some(l), Some(r)) if self.lowpt[l] > self.lowpt[r] => Some(l),
                    _ => hr,
                };
            }
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair::default();
        // Merge return edges of ei into p.right.
        loop {
            let mut q = self.stack.pop().expect("conflict pair present");
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.lowpt[q.right.low.unwrap()] > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.reference[p.right.low.unwrap()] = q.right.high;
                }
                p.right.low = q.right.low;
            } else {
                self.reference[q.right.low.unwrap()] = self.lowpt_edge[e];
            }
            if self.stack.last().copied() == self.stack_bottom[ei] {
                break;
            }
        }
        // Merge conflicting return edges of earlier siblings into p.left.
        while let Some(top) = self.stack.last().copied() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(low) = p.right.low {
                self.reference[low] = q.right.high;
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else {
                self.reference[p.left.low.unwrap()] = q.left.high;
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.oriented[e].0;
        let hu = self.height[u].unwrap();
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != hu {
                break;
            }
            let p = self.stack.pop().unwrap();
            if let Some(low) = p.left.low {
                self.side[low] = -1;
            }
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if self.oriented[h].1 != u {
                    break;
                }
                p.left.high = self.reference[h];
            }
            if p.left.high.is_none() {
                if let Some(low) = p.left.low {
                    self.reference[low] = p.right.low;
                    self.side[low] = -1;
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high {
                if self.oriented[h].1 != u {
                    break;
                }
                p.right.high = self.reference[h];
            }
            if p.right.high.is_none() {
                if let Some(low) = p.right.low {
                    self.reference[low] = p.left.low;
                    self.side[low] = -1;
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
    }

    fn sign(&mut self, e: usize) -> i64 {
        let mut chain = vec![e];
        while let Some(r) = self.reference[*chain.last().unwrap()] {
            chain.push(r);
        }
        for k in (0..chain.len() - 1).rev() {
            let (x, next) = (chain[k], chain[k + 1]);
            self.side[x] *= self.side[next];
            self.reference[x] = None;
        }
        self.side[e]
    }

    fn add_half_edge_cw(&mut self, start: usize, end: usize, reference: Option<usize>) {
        match reference {
            None => {
                self.rot[start].insert(end, (end, end));
                self.first_nbr[start] = Some(end);
            }
            Some(r) => {
                let cw_ref = self.rot[start][&r].0;
                self.rot[start].get_mut(&r).unwrap().0 = end;
                self.rot[start].insert(end, (cw_ref, r));
                self.rot[start].get_mut(&cw_ref).unwrap().1 = end;
            }
        }
    }

    fn add_half_edge_ccw(&mut self, start: usize, end: usize, reference: Option<usize>) {
        match reference {
            None => self.add_half_edge_cw(start, end, None),
            Some(r) => {
                let ccw_ref = self.rot[start][&r].1;
                self.add_half_edge_cw(start, end, Some(ccw_ref));
                if Some(r) == self.first_nbr[start] {
                    self.first_nbr[start] = Some(end);
                }
            }
        }
    }

    fn add_half_edge_first(&mut self, start: usize, end: usize) {
        let reference = self.first_nbr[start];
        self.add_half_edge_ccw(start, end, reference);
    }

    fn dfs_embedding(&mut self, v: usize) {
        let ordered = self.ordered[v].clone();
        for ei in ordered {
            let w = self.oriented[ei].1;
            if Some(ei) == self.parent_edge[w] {
                self.add_half_edge_first(w, v);
                self.left_ref[v] = w;
                self.right_ref[v] = w;
                self.dfs_embedding(w);
            } else if self.side[ei] == 1 {
                let r = self.right_ref[w];
                self.add_half_edge_cw(w, v, Some(r));
            } else {
                let r = self.left_ref[w];
                self.add_half_edge_ccw(w, v, Some(r));
                self.left_ref[w] = v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        e
    }

    fn euler_ok(n: usize, edges: &[(usize, usize)], rot: &Rotation) -> bool {
        // Assumes connected input.
        let faces = trace_faces(edges, rot);
        n as i64 - edges.len() as i64 + faces.faces.len() as i64 == 2
    }

    #[test]
    fn small_cases() {
        assert!(is_planar(4, &complete(4)));
        assert!(!is_planar(5, &complete(5)));
        let k33: Vec<_> = (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect();
        assert!(!is_planar(6, &k33));
        assert!(is_planar(0, &[]));
        assert!(is_planar(3, &[(0, 1)]));
    }

    #[test]
    fn k4_and_wheel_embeddings_satisfy_euler() {
        let e = complete(4);
        let rot = planar_embedding(4, &e).unwrap();
        assert!(euler_ok(4, &e, &rot));
        // Wheel with 7 spokes.
        let mut e = Vec::new();
        for k in 1..=7 {
            e.push((0, k));
            e.push((k, if k == 7 { 1 } else { k + 1 }));
        }
        let e = simple_edges(&e);
        let rot = planar_embedding(8, &e).unwrap();
        assert!(euler_ok(8, &e, &rot));
    }

    #[test]
    fn k5_witness_is_k5() {
        let w = kuratowski_witness(5, &complete(5)).unwrap();
        assert_eq!(w.len(), 10);
        assert!(kuratowski_witness(4, &complete(4)).is_none());
    }
}
