//! And-Inverter Graphs.
//!
//! An [`Aig`] is an ordered list of gates (`PI`, `NOT`, two-input `AND`)
//! with one designated output. Node ids are dense indices into that list and
//! a valid graph only references lower ids, so id order is a topological
//! order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Pi,
    And,
    Not,
}

impl NodeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Pi => "pi",
            NodeKind::And => "and",
            NodeKind::Not => "not",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NodeKind::Pi => 0,
            NodeKind::Not => 1,
            NodeKind::And => 2,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    Pi,
    Not(NodeId),
    And(NodeId, NodeId),
}

impl Gate {
    pub fn kind(&self) -> NodeKind {
        match self {
            Gate::Pi => NodeKind::Pi,
            Gate::Not(_) => NodeKind::Not,
            Gate::And(..) => NodeKind::And,
        }
    }

    pub fn fanins(&self) -> impl Iterator<Item = NodeId> {
        let (a, b) = match *self {
            Gate::Pi => (None, None),
            Gate::Not(x) => (Some(x), None),
            Gate::And(x, y) => (Some(x), Some(y)),
        };
        a.into_iter().chain(b)
    }

    pub fn fanin_count(&self) -> usize {
        self.kind().arity()
    }

    pub fn is_pi(&self) -> bool {
        matches!(self, Gate::Pi)
    }

    pub(crate) fn map(self, mut f: impl FnMut(NodeId) -> NodeId) -> Gate {
        match self {
            Gate::Pi => Gate::Pi,
            Gate::Not(x) => Gate::Not(f(x)),
            Gate::And(x, y) => Gate::And(f(x), f(y)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Aig {
    gates: Vec<Gate>,
    output: NodeId,
}

/// Which structural rule a [`Violation`] breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Empty,
    OutputOutOfRange,
    FaninOutOfRange(NodeId),
    ForwardReference(NodeId),
    Cycle,
    NotNot,
    DeadLogic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.node {
            write!(f, "node {n}: ")?;
        }
        match self.rule {
            Rule::Empty => f.write_str("empty graph"),
            Rule::OutputOutOfRange => f.write_str("output id out of range"),
            Rule::FaninOutOfRange(x) => write!(f, "fanin {x} out of range"),
            Rule::ForwardReference(x) => write!(f, "fanin {x} is not defined before its use"),
            Rule::Cycle => f.write_str("cycle"),
            Rule::NotNot => f.write_str("NOT→NOT edge"),
            Rule::DeadLogic => f.write_str("dead logic"),
        }
    }
}

impl Aig {
    /// Wraps gates without checking any invariant. Use [`Aig::validate`]
    /// before handing the value to anything that assumes validity.
    pub fn from_gates_unchecked(gates: Vec<Gate>, output: NodeId) -> Aig {
        Aig { gates, output }
    }

    pub fn new(gates: Vec<Gate>, output: NodeId) -> Result<Aig> {
        let g = Aig { gates, output };
        let report = g.validate();
        if report.is_empty() {
            Ok(g)
        } else {
            Err(Error::Invalid(report))
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: NodeId) -> Gate {
        self.gates[id]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.gates[id].kind()
    }

    /// Primary inputs in id order; this is the default input order.
    pub fn pis(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&i| self.gates[i].is_pi()).collect()
    }

    pub fn num_pis(&self) -> usize {
        self.gates.iter().filter(|g| g.is_pi()).count()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    pub fn edge_count(&self) -> usize {
        self.gates.iter().map(Gate::fanin_count).sum()
    }

    /// Consumers of every node, each list ascending and with one entry per
    /// edge (an `AND(x, x)` lists its consumer twice under `x`).
    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.len()];
        for (id, g) in self.gates.iter().enumerate() {
            for f in g.fanins() {
                if f < out.len() {
                    out[f].push(id);
                }
            }
        }
        out
    }

    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for g in &self.gates {
            for f in g.fanins() {
                if f < out.len() {
                    out[f] += 1;
                }
            }
        }
        out
    }

    /// Level of every node: PIs at 0, gates one above their deepest fanin.
    pub fn levels(&self) -> Vec<usize> {
        let order = self.topo_order().expect("levels of a cyclic graph");
        let mut level = vec![0usize; self.len()];
        for id in order {
            level[id] = self.gates[id].fanins().map(|f| level[f] + 1).max().unwrap_or(0);
        }
        level
    }

    /// Longest PI-to-output path, counted in edges.
    pub fn depth(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        self.levels().into_iter().max().unwrap_or(0)
    }

    /// Kahn's algorithm; among ready nodes the lowest id goes first, so the
    /// order is a pure function of the graph.
    pub fn topo_order(&self) -> Result<Vec<NodeId>> {
        let n = self.len();
        let mut pending = vec![0usize; n];
        let mut users = vec![Vec::new(); n];
        for (id, g) in self.gates.iter().enumerate() {
            for f in g.fanins() {
                if f >= n {
                    return Err(Error::Invalid(vec![Violation { node: Some(id), rule: Rule::FaninOutOfRange(f) }]));
                }
                pending[id] += 1;
                users[f].push(id);
            }
        }
        let mut ready: BinaryHeap<Reverse<NodeId>> = (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(id)) = ready.pop() {
            order.push(id);
            for &u in &users[id] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.push(Reverse(u));
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
            return Err(Error::NotADag(stuck));
        }
        Ok(order)
    }

    /// Checks every structural invariant and reports each breach. An empty
    /// report means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.len();
        let mut report = Vec::new();
        if n == 0 {
            report.push(Violation { node: None, rule: Rule::Empty });
            return report;
        }
        if self.output >= n {
            report.push(Violation { node: Some(self.output), rule: Rule::OutputOutOfRange });
        }
        let mut refs_ok = true;
        let mut forward = false;
        for (id, g) in self.gates.iter().enumerate() {
            for f in g.fanins() {
                if f >= n {
                    refs_ok = false;
                    report.push(Violation { node: Some(id), rule: Rule::FaninOutOfRange(f) });
                } else if f >= id {
                    forward = true;
                    report.push(Violation { node: Some(id), rule: Rule::ForwardReference(f) });
                }
            }
        }
        if refs_ok && forward {
            if let Err(Error::NotADag(at)) = self.topo_order() {
                report.push(Violation { node: Some(at), rule: Rule::Cycle });
            }
        }
        for (id, g) in self.gates.iter().enumerate() {
            if let Gate::Not(x) = *g {
                if x < n && matches!(self.gates[x], Gate::Not(_)) {
                    report.push(Violation { node: Some(id), rule: Rule::NotNot });
                }
            }
        }
        if self.output < n && refs_ok {
            let live = self.reaches_output();
            for (id, alive) in live.iter().enumerate() {
                if !alive {
                    report.push(Violation { node: Some(id), rule: Rule::DeadLogic });
                }
            }
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Nodes from which the output can be reached along fanout edges.
    pub fn reaches_output(&self) -> Vec<bool> {
        let mut live = vec![false; self.len()];
        let mut stack = vec![self.output];
        while let Some(id) = stack.pop() {
            if live[id] {
                continue;
            }
            live[id] = true;
            stack.extend(self.gates[id].fanins());
        }
        live
    }

    /// Transitive fan-in of `root`, `root` included, ascending.
    pub fn cone(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if !seen[id] {
                seen[id] = true;
                stack.extend(self.gates[id].fanins());
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Copy with ids relabeled by `perm` (old id -> new id). Fanins must
    /// still precede their users under the new labels for the result to be
    /// valid.
    pub fn relabeled(&self, perm: &[NodeId]) -> Aig {
        let mut gates = vec![Gate::Pi; self.len()];
        for (old, g) in self.gates.iter().enumerate() {
            gates[perm[old]] = g.map(|f| perm[f]);
        }
        Aig { gates, output: perm[self.output] }
    }
}

/// Incremental AIG construction.
///
/// `not` folds double negation, `and` folds `AND(x, x)`. With structural
/// hashing on, identical gates are shared. [`AigBuilder::finish`] drops
/// everything the chosen output does not depend on.
#[derive(Clone, Debug, Default)]
pub struct AigBuilder {
    gates: Vec<Gate>,
    levels: Vec<usize>,
    strash: Option<HashMap<Gate, NodeId>>,
}

impl AigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_strash() -> Self {
        AigBuilder { strash: Some(HashMap::new()), ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: NodeId) -> Gate {
        self.gates[id]
    }

    pub fn level(&self, id: NodeId) -> usize {
        self.levels[id]
    }

    fn push(&mut self, gate: Gate) -> NodeId {
        if let Some(table) = &self.strash {
            if let Some(&id) = table.get(&gate) {
                return id;
            }
        }
        let id = self.gates.len();
        let level = gate.fanins().map(|f| self.levels[f] + 1).max().unwrap_or(0);
        self.gates.push(gate);
        self.levels.push(level);
        if let Some(table) = &mut self.strash {
            table.insert(gate, id);
        }
        id
    }

    pub fn pi(&mut self) -> NodeId {
        let id = self.gates.len();
        self.gates.push(Gate::Pi);
        self.levels.push(0);
        id
    }

    pub fn not(&mut self, x: NodeId) -> NodeId {
        match self.gates[x] {
            Gate::Not(inner) => inner,
            _ => self.push(Gate::Not(x)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        if a == b {
            return a;
        }
        let gate = if self.strash.is_some() && b < a { Gate::And(b, a) } else { Gate::And(a, b) };
        self.push(gate)
    }

    /// True when one signal is the structural negation of the other.
    pub fn complementary(&self, a: NodeId, b: NodeId) -> bool {
        self.gates[a] == Gate::Not(b) || self.gates[b] == Gate::Not(a)
    }

    /// `and` that refuses to build a structurally constant gate.
    pub fn try_and(&mut self, a: NodeId, b: NodeId) -> Option<NodeId> {
        if self.complementary(a, b) {
            None
        } else {
            Some(self.and(a, b))
        }
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let na = self.not(a);
        let nb = self.not(b);
        let m = self.and(na, nb);
        self.not(m)
    }

    pub fn try_or(&mut self, a: NodeId, b: NodeId) -> Option<NodeId> {
        let na = self.not(a);
        let nb = self.not(b);
        let m = self.try_and(na, nb)?;
        Some(self.not(m))
    }

    pub fn finish(self, output: NodeId) -> Aig {
        self.finish_with_map(output).0
    }

    /// Keeps only the cone of `output`, renumbers densely in creation order
    /// and returns the old -> new id map (`None` for dropped nodes).
    pub fn finish_with_map(self, output: NodeId) -> (Aig, Vec<Option<NodeId>>) {
        let raw = Aig { gates: self.gates, output };
        let live = raw.reaches_output();
        let mut map = vec![None; raw.len()];
        let mut gates = Vec::new();
        for (old, g) in raw.gates.iter().enumerate() {
            if live[old] {
                map[old] = Some(gates.len());
                gates.push(g.map(|f| map[f].expect("fanin of a live node is live")));
            }
        }
        let out = map[output].expect("output is live");
        (Aig { gates, output: out }, map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and_chain() -> Aig {
        // AND(AND(a, b), c)
        Aig::new(vec![Gate::Pi, Gate::Pi, Gate::Pi, Gate::And(0, 1), Gate::And(3, 2)], 4).unwrap()
    }

    #[test]
    fn single_pi_is_legal() {
        let g = Aig::from_gates_unchecked(vec![Gate::Pi], 0);
        assert!(g.validate().is_empty());
        assert_eq!(g.depth(), 0);
    }

    #[test]
    fn not_not_is_reported() {
        let g = Aig::from_gates_unchecked(vec![Gate::Pi, Gate::Not(0), Gate::Not(1)], 2);
        let report = g.validate();
        assert_eq!(report, vec![Violation { node: Some(2), rule: Rule::NotNot }]);
        assert!(report[0].to_string().contains("NOT→NOT edge"));
    }

    #[test]
    fn unreachable_and_is_dead_logic() {
        let g = Aig::from_gates_unchecked(vec![Gate::Pi, Gate::Pi, Gate::And(0, 1), Gate::Not(0)], 3);
        let report = g.validate();
        assert!(report.contains(&Violation { node: Some(2), rule: Rule::DeadLogic }));
        assert!(report.contains(&Violation { node: Some(1), rule: Rule::DeadLogic }));
        assert!(report.iter().any(|v| v.to_string().contains("dead logic")));
    }

    #[test]
    fn validate_is_repeatable() {
        let g = Aig::from_gates_unchecked(vec![Gate::Pi, Gate::Not(0), Gate::Not(1), Gate::Pi], 2);
        assert_eq!(g.validate(), g.validate());
    }

    #[test]
    fn topo_order_small_cases() {
        let g = Aig::new(vec![Gate::Pi, Gate::Not(0)], 1).unwrap();
        assert_eq!(g.topo_order().unwrap(), vec![0, 1]);
        let g = Aig::new(vec![Gate::Pi, Gate::Pi, Gate::And(0, 1)], 2).unwrap();
        let order = g.topo_order().unwrap();
        assert_eq!(order.last(), Some(&2));
    }

    #[test]
    fn topo_order_follows_edges_not_ids() {
        let g = Aig::from_gates_unchecked(vec![Gate::Not(2), Gate::Pi, Gate::Pi, Gate::And(0, 1)], 3);
        let order = g.topo_order().unwrap();
        let pos = |x: usize| order.iter().position(|&y| y == x).unwrap();
        assert!(pos(2) < pos(0));
        assert!(pos(0) < pos(3));
        assert!(pos(1) < pos(3));
    }

    #[test]
    fn two_cycle_is_rejected() {
        let g = Aig::from_gates_unchecked(vec![Gate::Pi, Gate::And(0, 2), Gate::Not(1)], 2);
        assert!(matches!(g.topo_order(), Err(Error::NotADag(_))));
        assert!(g.validate().iter().any(|v| v.rule == Rule::Cycle));
    }

    #[test]
    fn depth_cases() {
        assert_eq!(and_chain().depth(), 2);
        // balanced tree over four inputs
        let g = Aig::new(
            vec![Gate::Pi, Gate::Pi, Gate::Pi, Gate::Pi, Gate::And(0, 1), Gate::And(2, 3), Gate::And(4, 5)],
            6,
        )
        .unwrap();
        assert_eq!(g.depth(), 2);
    }

    #[test]
    fn builder_folds_and_drops_dead() {
        let mut b = AigBuilder::new();
        let a = b.pi();
        let c = b.pi();
        let na = b.not(a);
        assert_eq!(b.not(na), a);
        let _unused = b.and(na, c);
        let out = b.and(a, c);
        let (g, map) = b.finish_with_map(out);
        assert!(g.is_valid());
        assert_eq!(g.len(), 3);
        assert_eq!(map[na], None);
    }

    #[test]
    fn strash_shares_commuted_gates() {
        let mut b = AigBuilder::with_strash();
        let a = b.pi();
        let c = b.pi();
        let x = b.and(a, c);
        let y = b.and(c, a);
        assert_eq!(x, y);
        let na = b.not(a);
        assert!(b.try_and(a, na).is_none());
    }

    #[test]
    fn single_sink_is_output() {
        let g = and_chain();
        let sinks: Vec<_> = g.fanout_counts().iter().enumerate().filter(|(_, &c)| c == 0).map(|(i, _)| i).collect();
        assert_eq!(sinks, vec![g.output()]);
    }
}
