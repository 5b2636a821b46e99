//! Subgraph sampling: k-hop cone partitioning of large circuits and the
//! randomized breadth-first sampler that produces query graphs.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::aig::{Aig, Gate, NodeId};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleParams {
    pub rho_min: f64,
    pub rho_max: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl SampleParams {
    pub fn new(seed: u64) -> Self {
        SampleParams { rho_min: 0.6, rho_max: 0.95, k_min: 8, k_max: 12, seed }
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0 < self.rho_min && self.rho_min <= self.rho_max && self.rho_max <= 1.0) {
            return Err(Error::Precondition(format!(
                "need 0 < rho_min <= rho_max <= 1, got [{}, {}]",
                self.rho_min, self.rho_max
            )));
        }
        if self.k_min > self.k_max || self.k_min == 0 {
            return Err(Error::Precondition(format!("need 1 <= k_min <= k_max, got {}..{}", self.k_min, self.k_max)));
        }
        Ok(())
    }
}

/// Splits `g` into k-hop fan-in cones.
///
/// The first cone is rooted at the output. Each further root is drawn
/// uniformly among uncovered gates whose readers are all covered, until
/// every gate lies in some cone. Nodes exactly k hops from the root become
/// primary inputs of the cone.
pub fn partition_khop(g: &Aig, params: &SampleParams) -> Result<Vec<Aig>> {
    params.check()?;
    let mut rng = rng_from(params.seed);
    let fanouts = g.fanouts();
    let mut covered = vec![false; g.len()];
    for (id, gate) in g.gates().iter().enumerate() {
        covered[id] = gate.is_pi();
    }
    let mut cones = Vec::new();
    let mut root = Some(g.output());
    while let Some(r) = root {
        let k = rng.gen_range(params.k_min..=params.k_max);
        let (cone, inner) = khop_cone(g, r, k);
        for n in inner {
            covered[n] = true;
        }
        cones.push(cone);
        let frontier: Vec<NodeId> =
            (0..g.len()).filter(|&n| !covered[n] && fanouts[n].iter().all(|&o| covered[o])).collect();
        root = frontier.choose(&mut rng).copied();
    }
    Ok(cones)
}

/// The cone of `root` truncated at depth `k`, plus the nodes it keeps as
/// gates.
fn khop_cone(g: &Aig, root: NodeId, k: usize) -> (Aig, Vec<NodeId>) {
    let mut dist: BTreeMap<NodeId, usize> = BTreeMap::new();
    dist.insert(root, 0);
    let mut queue = VecDeque::from([root]);
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        if d == k {
            continue;
        }
        for f in g.gate(n).fanins() {
            if let Entry::Vacant(e) = dist.entry(f) {
                e.insert(d + 1);
                queue.push_back(f);
            }
        }
    }
    let mut new_id = BTreeMap::new();
    let mut gates = Vec::with_capacity(dist.len());
    let mut inner = Vec::new();
    for (&n, &d) in &dist {
        let gate = if d == k { Gate::Pi } else { g.gate(n) };
        if !gate.is_pi() {
            inner.push(n);
        }
        new_id.insert(n, gates.len());
        gates.push(gate.map(|f| new_id[&f]));
    }
    let cone = Aig::new(gates, new_id[&root]).expect("truncated cones are valid");
    (cone, inner)
}

/// A sampled query graph and where its nodes came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub aig: Aig,
    /// Source node of each sample node; `None` for inputs added by repair.
    pub origin: Vec<Option<NodeId>>,
}

impl Sample {
    /// Source ids of the sampled (not repair-added) nodes, ascending.
    pub fn kept(&self) -> Vec<NodeId> {
        self.origin.iter().flatten().copied().collect()
    }
}

/// Size of every node's transitive fan-in cone, itself included.
pub fn pred_counts(g: &Aig) -> Vec<usize> {
    (0..g.len()).map(|n| g.cone(n).len()).collect()
}

/// Randomized breadth-first sample of `g`.
///
/// With probability one half the root moves from the output to its gate
/// fanin with the largest fan-in cone (lowest id on ties). A share
/// `rho ~ U[rho_min, rho_max]` of the node count is then collected by BFS
/// over shuffled fanins. The sample keeps every edge between collected
/// nodes; each outside node read by the sample becomes one fresh primary
/// input.
pub fn sample_subgraph_with(g: &Aig, params: &SampleParams) -> Result<Sample> {
    params.check()?;
    let mut rng = rng_from(params.seed);
    let mut root = g.output();
    if rng.gen_bool(0.5) {
        let counts = pred_counts(g);
        let mut best: Option<NodeId> = None;
        for f in g.gate(root).fanins() {
            if g.gate(f).is_pi() {
                continue;
            }
            if best.is_none_or(|b| counts[f] > counts[b] || (counts[f] == counts[b] && f < b)) {
                best = Some(f);
            }
        }
        if let Some(b) = best {
            root = b;
        }
    }
    let rho = rng.gen_range(params.rho_min..=params.rho_max);
    let target = rho * g.len() as f64;
    let mut picked: HashSet<NodeId> = HashSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while !queue.is_empty() && (picked.len() as f64) < target {
        let n = queue.pop_front().expect("non-empty");
        let mut fanins: Vec<NodeId> = g.gate(n).fanins().collect();
        fanins.dedup();
        fanins.shuffle(&mut rng);
        for v in fanins {
            if picked.insert(v) {
                queue.push_back(v);
            }
        }
    }
    repair(g, root, &picked)
}

pub fn sample_subgraph(g: &Aig, seed: u64) -> Result<Sample> {
    sample_subgraph_with(g, &SampleParams::new(seed))
}

/// Samples with derived seeds until the result is not degenerate.
pub fn sample_with_retries(g: &Aig, params: &SampleParams, attempts: usize) -> Result<Sample> {
    let mut last = Error::DegenerateSample(0);
    for a in 0..attempts.max(1) {
        let p = SampleParams { seed: derive_seed(params.seed, a as u64), ..params.clone() };
        match sample_subgraph_with(g, &p) {
            Ok(s) => return Ok(s),
            Err(e @ Error::DegenerateSample(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn repair(g: &Aig, root: NodeId, picked: &HashSet<NodeId>) -> Result<Sample> {
    let mut kept: Vec<NodeId> = picked.iter().copied().collect();
    kept.sort_unstable();
    let mut outside: Vec<NodeId> =
        kept.iter().flat_map(|&n| g.gate(n).fanins()).filter(|f| !picked.contains(f)).collect();
    outside.sort_unstable();
    outside.dedup();
    let mut new_id = BTreeMap::new();
    let mut gates = Vec::with_capacity(outside.len() + kept.len());
    let mut origin = Vec::with_capacity(gates.capacity());
    for &o in &outside {
        new_id.insert(o, gates.len());
        gates.push(Gate::Pi);
        origin.push(None);
    }
    for &n in &kept {
        new_id.insert(n, gates.len());
        gates.push(g.gate(n).map(|f| new_id[&f]));
        origin.push(Some(n));
    }
    if gates.len() < 2 {
        return Err(Error::DegenerateSample(gates.len()));
    }
    let aig = Aig::new(gates, new_id[&root])?;
    Ok(Sample { aig, origin })
}
