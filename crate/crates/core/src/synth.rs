//! Function-preserving restructuring.
//!
//! Each pass scans the input graph for applicable sites, picks a random
//! subset of them and rebuilds the graph in id order, replacing every
//! selected site by an equivalent structure built from the new images of
//! its leaves. The rebuild folds double negation and drops logic the output
//! no longer uses. A site whose replacement would need a structurally
//! constant gate (`AND(x, NOT x)`) is copied unchanged. A pass never changes
//! the set of primary inputs; if cleanup would drop one, the input graph is
//! returned as is.
//!
//! | pass | site | replacement |
//! |------|------|-------------|
//! | `strash` | whole graph | share identical gates (`AND` fanins unordered) |
//! | `balance` | root of a single-fanout `AND` cluster with >= 3 leaves whose depth can shrink | depth-balanced `AND` tree over the leaves |
//! | `factor` | `(a & b) \| (a & c)` | `a & (b \| c)` |
//! | `unfactor` | `a & !(p & q)` | `(a & !p) \| (a & !q)` |
//! | `demorgan_push` | `p & !(x & y)` | `p & !(p & x & y)` |
//! | `reassociate` | `(a & b) & c`, inner single-fanout | `a & (b & c)` or `b & (a & c)` |

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::aig::{Aig, AigBuilder, Gate, NodeId};
use crate::error::{Error, Result};
use crate::iso::is_isomorphic;
use crate::rng::{derive_seed, rng_from};

pub const MAX_RETRIES: usize = 10;
/// Default upper bound on sites rewritten by one pass.
pub const DEFAULT_MAX_SITES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PassKind {
    Strash,
    Balance,
    Factor,
    Unfactor,
    DemorganPush,
    Reassociate,
}

impl PassKind {
    pub const ALL: [PassKind; 6] = [
        PassKind::Strash,
        PassKind::Balance,
        PassKind::Factor,
        PassKind::Unfactor,
        PassKind::DemorganPush,
        PassKind::Reassociate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PassKind::Strash => "strash",
            PassKind::Balance => "balance",
            PassKind::Factor => "factor",
            PassKind::Unfactor => "unfactor",
            PassKind::DemorganPush => "demorgan_push",
            PassKind::Reassociate => "reassociate",
        }
    }
}

impl fmt::Display for PassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PassKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PassKind::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown pass `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewritePass {
    pub kind: PassKind,
    /// At most this many sites are rewritten per application.
    pub max_sites: usize,
}

impl RewritePass {
    pub fn new(kind: PassKind) -> Self {
        RewritePass { kind, max_sites: DEFAULT_MAX_SITES }
    }
}

/// Named flows and their pass sequences.
pub const FLOW_NAMES: [&str; 5] = ["src_rw", "src_rs", "src_rws", "resyn2rs", "compress2rs"];

fn flow_passes(name: &str) -> Option<Vec<PassKind>> {
    use PassKind::*;
    Some(match name {
        "src_rw" => vec![Strash, Unfactor, Reassociate],
        "src_rs" => vec![Strash, Factor, DemorganPush, Reassociate],
        "src_rws" => vec![Strash, Unfactor, Reassociate, Factor, Balance],
        "resyn2rs" => vec![Balance, Reassociate, Unfactor, Balance, DemorganPush, Strash],
        "compress2rs" => vec![Balance, Factor, Strash, DemorganPush, Reassociate],
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    pub name: String,
    pub passes: Vec<RewritePass>,
    pub seed: u64,
}

impl Flow {
    pub fn named(name: &str, seed: u64) -> Result<Flow> {
        let passes = flow_passes(name)
            .ok_or_else(|| Error::Precondition(format!("unknown flow `{name}` (known: {})", FLOW_NAMES.join(", "))))?;
        Ok(Flow { name: name.to_string(), passes: passes.into_iter().map(RewritePass::new).collect(), seed })
    }

    pub fn custom(name: &str, passes: Vec<RewritePass>, seed: u64) -> Result<Flow> {
        if passes.is_empty() {
            return Err(Error::Precondition("a flow needs at least one pass".into()));
        }
        Ok(Flow { name: name.to_string(), passes, seed })
    }
}

/// Runs the flow, retrying with derived seeds until the result is not
/// isomorphic to the input.
pub fn apply_flow(g: &Aig, flow: &Flow) -> Result<Aig> {
    apply_flow_with_retries(g, flow, MAX_RETRIES)
}

pub fn apply_flow_with_retries(g: &Aig, flow: &Flow, max_retries: usize) -> Result<Aig> {
    for attempt in 0..=max_retries {
        let attempt_seed = derive_seed(flow.seed, attempt as u64);
        let mut cur = g.clone();
        for (i, pass) in flow.passes.iter().enumerate() {
            cur = apply_pass(&cur, pass, derive_seed(attempt_seed, i as u64));
        }
        if !is_isomorphic(&cur, g) {
            return Ok(cur);
        }
    }
    Err(Error::CannotRestructure(max_retries + 1))
}

pub fn apply_pass(g: &Aig, pass: &RewritePass, seed: u64) -> Aig {
    let out = match pass.kind {
        PassKind::Strash => strash(g),
        kind => {
            let sites = find_sites(g, kind);
            if sites.is_empty() {
                return g.clone();
            }
            let mut rng = rng_from(seed);
            let k = rng.gen_range(1..=pass.max_sites.max(1).min(sites.len()));
            let chosen: BTreeMap<NodeId, Site> =
                sites.choose_multiple(&mut rng, k).map(|s| (s.root, s.clone())).collect();
            rebuild(g, &chosen, &mut rng)
        }
    };
    if out.num_pis() != g.num_pis() {
        g.clone()
    } else {
        out
    }
}

pub fn strash(g: &Aig) -> Aig {
    let mut b = AigBuilder::with_strash();
    let mut map = Vec::with_capacity(g.len());
    for gate in g.gates() {
        let id = match *gate {
            Gate::Pi => b.pi(),
            Gate::Not(x) => b.not(map[x]),
            Gate::And(x, y) => b.and(map[x], map[y]),
        };
        map.push(id);
    }
    b.finish(map[g.output()])
}

#[derive(Clone, Debug)]
enum Pattern {
    /// `AND(a, m)`, `m = AND(b, c)` single-fanout
    Reassociate { a: NodeId, b: NodeId, c: NodeId },
    /// `AND(a, NOT(AND(p, q)))`
    Unfactor { a: NodeId, p: NodeId, q: NodeId },
    /// `NOT(AND(NOT(AND(a, b)), NOT(AND(a, c))))`
    Factor { a: NodeId, b: NodeId, c: NodeId },
    /// `AND(p, NOT(AND(x, y)))`
    Push { p: NodeId, x: NodeId, y: NodeId },
    /// `AND` cluster with its leaves
    Balance { leaves: Vec<NodeId> },
}

#[derive(Clone, Debug)]
struct Site {
    root: NodeId,
    pattern: Pattern,
}

fn and_fanins(g: &Aig, n: NodeId) -> Option<(NodeId, NodeId)> {
    match g.gate(n) {
        Gate::And(a, b) => Some((a, b)),
        _ => None,
    }
}

fn not_fanin(g: &Aig, n: NodeId) -> Option<NodeId> {
    match g.gate(n) {
        Gate::Not(x) => Some(x),
        _ => None,
    }
}

fn find_sites(g: &Aig, kind: PassKind) -> Vec<Site> {
    let fanout = g.fanout_counts();
    let levels = g.levels();
    let mut sites = Vec::new();
    for root in 0..g.len() {
        match kind {
            PassKind::Reassociate => {
                let Some((l, r)) = and_fanins(g, root) else { continue };
                for (inner, a) in [(l, r), (r, l)] {
                    if fanout[inner] == 1 {
                        if let Some((b, c)) = and_fanins(g, inner) {
                            if b != c {
                                sites.push(Site { root, pattern: Pattern::Reassociate { a, b, c } });
                            }
                        }
                    }
                }
            }
            PassKind::Unfactor | PassKind::DemorganPush => {
                let Some((l, r)) = and_fanins(g, root) else { continue };
                for (a, neg) in [(l, r), (r, l)] {
                    let Some(m) = not_fanin(g, neg) else { continue };
                    let Some((p, q)) = and_fanins(g, m) else { continue };
                    if p == q || a == p || a == q {
                        continue;
                    }
                    let pattern = if kind == PassKind::Unfactor {
                        Pattern::Unfactor { a, p, q }
                    } else {
                        Pattern::Push { p: a, x: p, y: q }
                    };
                    sites.push(Site { root, pattern });
                }
            }
            PassKind::Factor => {
                let Some(m) = not_fanin(g, root) else { continue };
                let Some((l, r)) = and_fanins(g, m) else { continue };
                let (Some(s), Some(t)) = (not_fanin(g, l), not_fanin(g, r)) else { continue };
                let (Some((s0, s1)), Some((t0, t1))) = (and_fanins(g, s), and_fanins(g, t)) else { continue };
                let shared = [(s0, s1, t0, t1), (s0, s1, t1, t0), (s1, s0, t0, t1), (s1, s0, t1, t0)]
                    .into_iter()
                    .find(|&(a, b, a2, c)| a == a2 && b != c && b != a && c != a);
                if let Some((a, b, _, c)) = shared {
                    sites.push(Site { root, pattern: Pattern::Factor { a, b, c } });
                }
            }
            PassKind::Balance => {
                if and_fanins(g, root).is_none() {
                    continue;
                }
                let leaves = cluster_leaves(g, root, &fanout);
                if leaves.len() >= 3 && balanced_level(leaves.iter().map(|&l| levels[l])) < levels[root] {
                    sites.push(Site { root, pattern: Pattern::Balance { leaves } });
                }
            }
            PassKind::Strash => {}
        }
    }
    if kind == PassKind::Balance {
        // keep only cluster roots: drop sites absorbed into a selected parent cluster
        let users = g.fanouts();
        sites.retain(|s| !(fanout[s.root] == 1 && users[s.root].iter().any(|&u| and_fanins(g, u).is_some())));
    }
    sites
}

/// Leaves of the `AND` cluster rooted at `root`: descend through `AND`
/// fanins that have no other consumer.
fn cluster_leaves(g: &Aig, root: NodeId, fanout: &[usize]) -> Vec<NodeId> {
    let mut leaves = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        let (a, b) = and_fanins(g, n).expect("cluster nodes are ANDs");
        for x in [b, a] {
            if fanout[x] == 1 && and_fanins(g, x).is_some() {
                stack.push(x);
            } else {
                leaves.push(x);
            }
        }
    }
    leaves
}

/// Level of the root of a balanced tree built by pairing the two shallowest
/// operands first.
fn balanced_level(levels: impl Iterator<Item = usize>) -> usize {
    let mut heap: BinaryHeap<Reverse<usize>> = levels.map(Reverse).collect();
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().expect("len > 1");
        let Reverse(b) = heap.pop().expect("len > 1");
        heap.push(Reverse(a.max(b) + 1));
    }
    heap.pop().map(|Reverse(l)| l).unwrap_or(0)
}

fn rebuild(g: &Aig, chosen: &BTreeMap<NodeId, Site>, rng: &mut impl Rng) -> Aig {
    let mut b = AigBuilder::new();
    let mut map: Vec<NodeId> = Vec::with_capacity(g.len());
    for (id, gate) in g.gates().iter().enumerate() {
        let replaced = chosen.get(&id).and_then(|site| replace(&mut b, &map, &site.pattern, rng));
        let new = match (replaced, *gate) {
            (Some(n), _) => n,
            (None, Gate::Pi) => b.pi(),
            (None, Gate::Not(x)) => b.not(map[x]),
            (None, Gate::And(x, y)) => b.and(map[x], map[y]),
        };
        map.push(new);
    }
    b.finish(map[g.output()])
}

fn replace(b: &mut AigBuilder, map: &[NodeId], pattern: &Pattern, rng: &mut impl Rng) -> Option<NodeId> {
    match *pattern {
        Pattern::Reassociate { a, b: x, c } => {
            let (keep, pair) = if rng.gen_bool(0.5) { (x, (a, c)) } else { (c, (a, x)) };
            let inner = b.try_and(map[pair.0], map[pair.1])?;
            b.try_and(map[keep], inner)
        }
        Pattern::Unfactor { a, p, q } => {
            let (a, np, nq) = (map[a], b.not(map[p]), b.not(map[q]));
            let l = b.try_and(a, np)?;
            let r = b.try_and(a, nq)?;
            b.try_or(l, r)
        }
        Pattern::Factor { a, b: x, c } => {
            let or = b.try_or(map[x], map[c])?;
            b.try_and(map[a], or)
        }
        Pattern::Push { p, x, y } => {
            let px = b.try_and(map[p], map[x])?;
            let pxy = b.try_and(px, map[y])?;
            let n = b.not(pxy);
            b.try_and(map[p], n)
        }
        Pattern::Balance { ref leaves } => {
            let mut ops: Vec<NodeId> = leaves.iter().map(|&l| map[l]).collect();
            ops.sort_unstable();
            ops.dedup();
            for (i, &x) in ops.iter().enumerate() {
                if ops[i + 1..].iter().any(|&y| b.complementary(x, y)) {
                    return None;
                }
            }
            let mut heap: BinaryHeap<Reverse<(usize, NodeId)>> =
                ops.iter().map(|&x| Reverse((b.level(x), x))).collect();
            while heap.len() > 1 {
                let Reverse((_, x)) = heap.pop().expect("len > 1");
                let Reverse((_, y)) = heap.pop().expect("len > 1");
                let n = b.and(x, y);
                heap.push(Reverse((b.level(n), n)));
            }
            heap.pop().map(|Reverse((_, n))| n)
        }
    }
}
