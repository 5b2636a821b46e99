//! Seeded random AIGs for tests, acceptance runs and synthetic corpora.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::Rng;

use crate::aig::{Aig, AigBuilder, Gate, NodeId};
use crate::rng::{derive_seed, rng_from};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomAigParams {
    pub pis: RangeInclusive<usize>,
    pub nodes: RangeInclusive<usize>,
    /// Chance that a new gate is a NOT.
    pub not_percent: u32,
    /// Fanins are drawn from the most recent `window` nodes with 70% chance.
    pub window: usize,
}

impl Default for RandomAigParams {
    fn default() -> Self {
        RandomAigParams { pis: 6..=12, nodes: 30..=200, not_percent: 25, window: 16 }
    }
}

impl RandomAigParams {
    pub fn new(pis: RangeInclusive<usize>, nodes: RangeInclusive<usize>) -> Self {
        RandomAigParams { pis, nodes, ..Self::default() }
    }
}

const MAX_ATTEMPTS: u64 = 64;

/// A valid AIG whose input and node counts fall inside the given ranges.
///
/// Gates are added with a bias toward recent nodes, then every node nobody
/// reads is folded into the output through a balanced AND tree.
pub fn random_aig(params: &RandomAigParams, seed: u64) -> Aig {
    assert!(*params.pis.start() >= 1 && !params.pis.is_empty(), "need at least one input");
    assert!(!params.nodes.is_empty(), "empty node range");
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let g = attempt_once(params, derive_seed(seed, attempt));
        if params.nodes.contains(&g.len()) {
            return g;
        }
        last = Some(g);
    }
    panic!(
        "no circuit with {:?} inputs and {:?} nodes after {MAX_ATTEMPTS} attempts (last had {} nodes)",
        params.pis,
        params.nodes,
        last.map_or(0, |g| g.len())
    )
}

fn attempt_once(params: &RandomAigParams, seed: u64) -> Aig {
    let mut rng = rng_from(seed);
    let n_pis = rng.gen_range(params.pis.clone());
    let target = rng.gen_range(params.nodes.clone()).max(n_pis);
    let mut b = AigBuilder::new();
    for _ in 0..n_pis {
        b.pi();
    }
    let mut fanout = vec![0usize; n_pis];
    let mut dangling = n_pis;
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut negated: HashSet<NodeId> = HashSet::new();
    let pick = |rng: &mut rand_chacha::ChaCha8Rng, len: usize| -> NodeId {
        if len > params.window && rng.gen_bool(0.7) {
            rng.gen_range(len - params.window..len)
        } else {
            rng.gen_range(0..len)
        }
    };
    // The merge tree adds `dangling - 1` ANDs; stop once that reaches the target.
    let mut stalls = 0;
    while b.len() + dangling - 1 < target && stalls < 1000 {
        let len = b.len();
        let gate = if rng.gen_range(0..100) < params.not_percent {
            let x = pick(&mut rng, len);
            if matches!(b.gate(x), Gate::Not(_)) || !negated.insert(x) {
                None
            } else {
                Some(Gate::Not(x))
            }
        } else {
            let x = pick(&mut rng, len);
            let y = pick(&mut rng, len);
            let key = (x.min(y), x.max(y));
            if x == y || b.complementary(x, y) || seen.contains(&key) {
                None
            } else {
                seen.insert(key);
                Some(Gate::And(x, y))
            }
        };
        let Some(gate) = gate else {
            stalls += 1;
            continue;
        };
        stalls = 0;
        let id = match gate {
            Gate::Not(x) => b.not(x),
            Gate::And(x, y) => b.and(x, y),
            Gate::Pi => unreachable!(),
        };
        for f in gate.fanins() {
            if fanout[f] == 0 {
                dangling -= 1;
            }
            fanout[f] += 1;
        }
        debug_assert_eq!(id, fanout.len());
        fanout.push(0);
        dangling += 1;
    }
    let mut queue: Vec<NodeId> = (0..b.len()).filter(|&i| fanout[i] == 0).collect();
    while queue.len() > 1 {
        let mut next = Vec::with_capacity(queue.len().div_ceil(2));
        for pair in queue.chunks(2) {
            next.push(if pair.len() == 2 { b.and(pair[0], pair[1]) } else { pair[0] });
        }
        queue = next;
    }
    let mut out = queue[0];
    if b.len() < target && !matches!(b.gate(out), Gate::Not(_)) && rng.gen_bool(0.5) {
        out = b.not(out);
    }
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn respects_ranges_and_validity() {
        let params = RandomAigParams::default();
        for seed in 0..200 {
            let g = random_aig(&params, seed);
            assert!(g.is_valid(), "seed {seed}: {:?}", g.validate());
            assert!(params.nodes.contains(&g.len()), "seed {seed}: {} nodes", g.len());
            assert!(params.pis.contains(&g.num_pis()), "seed {seed}: {} inputs", g.num_pis());
        }
    }

    #[test]
    fn seeded() {
        let p = RandomAigParams::new(3..=5, 10..=20);
        assert_eq!(random_aig(&p, 9), random_aig(&p, 9));
    }
}
