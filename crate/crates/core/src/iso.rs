//! Structural subgraph matching on AIGs.
//!
//! An embedding maps every query node to a distinct target node such that
//! gates keep their kind and every query gate's fanins land on the fanins of
//! its image. `AND` fanins are matched as an unordered pair. Query inputs
//! may land on any target node (cut semantics) unless the search is
//! [`EmbedMode::Anchored`], where they must land on target inputs.
//!
//! The search is a VF2-style depth-first extension. Query nodes are visited
//! from the output down in descending id order, so every node's consumers
//! are already matched when it is reached and its candidates are the fanins
//! of those consumers' images. A memoised structural compatibility table
//! (the same matching problem with injectivity dropped) prunes branches
//! that cannot complete.

use std::collections::HashMap;

use crate::aig::{Aig, Gate, NodeId, NodeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedMode {
    /// Query inputs may map to any target node.
    Cut,
    /// Query inputs map to target inputs only.
    Anchored,
}

/// Injective map from query node ids (the index) to target node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    pub pairs: Vec<NodeId>,
}

impl Mapping {
    pub fn image(&self, q: NodeId) -> NodeId {
        self.pairs[q]
    }

    /// Edge-by-edge check of the embedding conditions, independent of the
    /// search that produced the mapping.
    pub fn verify(&self, q: &Aig, g: &Aig, mode: EmbedMode) -> bool {
        if self.pairs.len() != q.len() {
            return false;
        }
        let mut used = vec![false; g.len()];
        for &t in &self.pairs {
            if t >= g.len() || used[t] {
                return false;
            }
            used[t] = true;
        }
        for (u, gate) in q.gates().iter().enumerate() {
            let t = self.pairs[u];
            let ok = match (*gate, g.gate(t)) {
                (Gate::Pi, tg) => mode == EmbedMode::Cut || tg.is_pi(),
                (Gate::Not(a), Gate::Not(c)) => self.pairs[a] == c,
                (Gate::And(a, b), Gate::And(c, d)) => {
                    let (x, y) = (self.pairs[a], self.pairs[b]);
                    (x == c && y == d) || (x == d && y == c)
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

pub fn find_embedding(q: &Aig, g: &Aig) -> Option<Mapping> {
    find_embedding_with(q, g, EmbedMode::Cut)
}

pub fn find_embedding_with(q: &Aig, g: &Aig, mode: EmbedMode) -> Option<Mapping> {
    if q.is_empty() || q.len() > g.len() {
        return None;
    }
    Matcher::new(q, g, mode, false).run()
}

/// True iff a bijection between the two graphs preserves kinds and edges.
pub fn is_isomorphic(a: &Aig, b: &Aig) -> bool {
    if a.len() != b.len()
        || a.count_kind(NodeKind::Pi) != b.count_kind(NodeKind::Pi)
        || a.count_kind(NodeKind::And) != b.count_kind(NodeKind::And)
        || a.count_kind(NodeKind::Not) != b.count_kind(NodeKind::Not)
        || a.edge_count() != b.edge_count()
    {
        return false;
    }
    let (ha, hb) = (shape_hashes(a), shape_hashes(b));
    let mut sa = ha.clone();
    let mut sb = hb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb || ha[a.output()] != hb[b.output()] {
        return false;
    }
    let mut m = Matcher::new(a, b, EmbedMode::Anchored, true);
    m.shapes = Some((ha, hb));
    m.run().is_some()
}

/// Bottom-up hash of each node's unfolded fan-in tree with `AND` children
/// unordered. Isomorphisms preserve it.
fn shape_hashes(g: &Aig) -> Vec<u64> {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut h: Vec<u64> = Vec::with_capacity(g.len());
    for gate in g.gates() {
        let v = match *gate {
            Gate::Pi => 0x51,
            Gate::Not(x) => mix(0x4E ^ h[x].rotate_left(7)),
            Gate::And(x, y) => {
                let (lo, hi) = if h[x] <= h[y] { (h[x], h[y]) } else { (h[y], h[x]) };
                mix(0x41 ^ mix(lo).wrapping_add(hi.rotate_left(17)))
            }
        };
        h.push(v);
    }
    h
}

struct Matcher<'a> {
    q: &'a Aig,
    g: &'a Aig,
    mode: EmbedMode,
    exact: bool,
    q_users: Vec<Vec<NodeId>>,
    q_fanout: Vec<usize>,
    g_fanout: Vec<usize>,
    q_level: Vec<usize>,
    g_level: Vec<usize>,
    shapes: Option<(Vec<u64>, Vec<u64>)>,
    compat: HashMap<(NodeId, NodeId), bool>,
    image: Vec<Option<NodeId>>,
    used: Vec<bool>,
}

impl<'a> Matcher<'a> {
    fn new(q: &'a Aig, g: &'a Aig, mode: EmbedMode, exact: bool) -> Self {
        let mut q_users = q.fanouts();
        for users in &mut q_users {
            users.dedup();
        }
        Matcher {
            q,
            g,
            mode,
            exact,
            q_fanout: q.fanout_counts(),
            g_fanout: g.fanout_counts(),
            q_level: q.levels(),
            g_level: g.levels(),
            q_users,
            shapes: None,
            compat: HashMap::new(),
            image: vec![None; q.len()],
            used: vec![false; g.len()],
        }
    }

    /// Can the cone under `u` map onto the cone under `x`, ignoring
    /// injectivity?
    fn compatible(&mut self, u: NodeId, x: NodeId) -> bool {
        if let Some(&v) = self.compat.get(&(u, x)) {
            return v;
        }
        let v = match (self.q.gate(u), self.g.gate(x)) {
            (Gate::Pi, tg) => self.mode == EmbedMode::Cut || tg.is_pi(),
            (Gate::Not(a), Gate::Not(c)) => self.compatible(a, c),
            (Gate::And(a, b), Gate::And(c, d)) => {
                if a == b {
                    c == d && self.compatible(a, c)
                } else {
                    (self.compatible(a, c) && self.compatible(b, d)) || (self.compatible(a, d) && self.compatible(b, c))
                }
            }
            _ => false,
        };
        self.compat.insert((u, x), v);
        v
    }

    fn feasible(&mut self, u: NodeId, x: NodeId) -> bool {
        if self.used[x] {
            return false;
        }
        let qk = self.q.kind(u);
        let gk = self.g.kind(x);
        match (qk, self.mode) {
            (NodeKind::Pi, EmbedMode::Cut) => {}
            _ if qk != gk => return false,
            _ => {}
        }
        if self.exact {
            if self.q_fanout[u] != self.g_fanout[x] || self.q_level[u] != self.g_level[x] {
                return false;
            }
            if let Some((hq, hg)) = &self.shapes {
                if hq[u] != hg[x] {
                    return false;
                }
            }
        } else if self.g_fanout[x] < self.q_fanout[u] || self.g_level[x] < self.q_level[u] {
            return false;
        }
        for i in 0..self.q_users[u].len() {
            let v = self.q_users[u][i];
            let t = self.image[v].expect("consumers are matched first");
            let ok = match (self.q.gate(v), self.g.gate(t)) {
                (Gate::Not(_), Gate::Not(c)) => x == c,
                (Gate::And(a, b), Gate::And(c, d)) => {
                    if a == b {
                        x == c && x == d
                    } else {
                        let other = if a == u { b } else { a };
                        match self.image[other] {
                            Some(y) => (x == c && y == d) || (x == d && y == c),
                            None => x == c || x == d,
                        }
                    }
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        self.compatible(u, x)
    }

    fn candidates(&self, u: NodeId) -> Vec<NodeId> {
        if let Some(&v) = self.q_users[u].first() {
            let t = self.image[v].expect("consumers are matched first");
            let mut c: Vec<NodeId> = self.g.gate(t).fanins().collect();
            c.sort_unstable();
            c.dedup();
            return c;
        }
        if self.exact {
            return vec![self.g.output()];
        }
        let mut c: Vec<NodeId> = (0..self.g.len()).collect();
        c.sort_by_key(|&x| (self.g.kind(x), self.g.gate(x).fanin_count(), x));
        c
    }

    fn run(mut self) -> Option<Mapping> {
        let order: Vec<NodeId> = (0..self.q.len()).rev().collect();
        // frames[i] = (candidates for order[i], index of the next one to try)
        let mut frames: Vec<(Vec<NodeId>, usize)> = Vec::with_capacity(order.len());
        frames.push((self.candidates(order[0]), 0));
        loop {
            let depth = frames.len() - 1;
            let u = order[depth];
            if let Some(prev) = self.image[u].take() {
                self.used[prev] = false;
            }
            let mut chosen = None;
            while frames[depth].1 < frames[depth].0.len() {
                let x = frames[depth].0[frames[depth].1];
                frames[depth].1 += 1;
                if self.feasible(u, x) {
                    chosen = Some(x);
                    break;
                }
            }
            match chosen {
                Some(x) => {
                    self.image[u] = Some(x);
                    self.used[x] = true;
                    if depth + 1 == order.len() {
                        let pairs = self.image.iter().map(|m| m.expect("all matched")).collect();
                        return Some(Mapping { pairs });
                    }
                    let next = self.candidates(order[depth + 1]);
                    frames.push((next, 0));
                }
                None => {
                    frames.pop();
                    if frames.is_empty() {
                        return None;
                    }
                }
            }
        }
    }
}
