//! Cut-based technology mapping and its inverse.
//!
//! [`map_to_cells`] enumerates K-feasible cuts, matches each cut function
//! against the library under all pin permutations and picks, per node, the
//! match minimising the cell count of its fan-in tree. [`expand`] replaces
//! every cell by its template and records which cell produced each AIG
//! node.
//!
//! Expansion folds `NOT(NOT x)` where a template ending in an inverter
//! feeds a template starting with one. Node-map entries follow the
//! surviving node; a cell left without any node of its own is attached to
//! the node that now carries its output value (walking from the vanished
//! output node toward its inputs until a surviving node is found).

use std::collections::{BTreeMap, HashMap};

use crate::aig::{Aig, AigBuilder, Gate, NodeId};
use crate::error::{Error, Result};
use crate::library::CellLibrary;
use crate::pm::{CellId, PmCell, PmNetlist, Signal};
use crate::rng::sha256_hex;

pub const DEFAULT_K: usize = 4;
pub const CUT_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut {
    pub root: NodeId,
    /// Ascending.
    pub leaves: Vec<NodeId>,
}

impl Cut {
    pub fn is_trivial(&self) -> bool {
        self.leaves.len() == 1 && self.leaves[0] == self.root
    }
}

/// Cuts of every node, at most [`CUT_CAP`] each, ordered by leaf count then
/// leaf ids. The trivial cut is always present.
pub fn enumerate_cuts(g: &Aig, k: usize) -> Vec<Vec<Cut>> {
    assert!((2..=4).contains(&k), "cut size must be in 2..=4");
    let mut cuts: Vec<Vec<Cut>> = Vec::with_capacity(g.len());
    for (root, gate) in g.gates().iter().enumerate() {
        let mut sets: Vec<Vec<NodeId>> = vec![vec![root]];
        match *gate {
            Gate::Pi => {}
            Gate::Not(a) => sets.extend(cuts[a].iter().map(|c| c.leaves.clone())),
            Gate::And(a, b) => {
                for ca in &cuts[a] {
                    for cb in &cuts[b] {
                        let mut u = ca.leaves.clone();
                        u.extend(&cb.leaves);
                        u.sort_unstable();
                        u.dedup();
                        if u.len() <= k {
                            sets.push(u);
                        }
                    }
                }
            }
        }
        sets.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        sets.dedup();
        sets.truncate(CUT_CAP);
        debug_assert!(sets.iter().any(|s| s == &[root]));
        cuts.push(sets.into_iter().map(|leaves| Cut { root, leaves }).collect());
    }
    cuts
}

const LEAF_MASKS: [u16; 4] = [0xAAAA, 0xCCCC, 0xF0F0, 0xFF00];

/// Function of `root` over the cut leaves, row r at bit r, leaf 0 least
/// significant.
pub fn cut_truth(g: &Aig, cut: &Cut) -> u16 {
    fn go(g: &Aig, n: NodeId, memo: &mut HashMap<NodeId, u16>) -> u16 {
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        let v = match g.gate(n) {
            Gate::Pi => panic!("cut does not separate node {n} from the inputs"),
            Gate::Not(x) => !go(g, x, memo),
            Gate::And(x, y) => go(g, x, memo) & go(g, y, memo),
        };
        memo.insert(n, v);
        v
    }
    let mut memo: HashMap<NodeId, u16> = cut.leaves.iter().enumerate().map(|(i, &l)| (l, LEAF_MASKS[i])).collect();
    let rows = 1u32 << cut.leaves.len();
    let mask = if rows >= 16 { u16::MAX } else { (1u16 << rows) - 1 };
    go(g, cut.root, &mut memo) & mask
}

#[derive(Clone, Debug)]
struct CellMatch {
    cell: String,
    /// `perm[p]` = leaf index wired to pin p
    perm: Vec<usize>,
}

/// Match table keyed by (arity, truth bits over the leaves).
fn match_table(lib: &CellLibrary) -> HashMap<(usize, u16), Vec<CellMatch>> {
    let mut table: HashMap<(usize, u16), Vec<CellMatch>> = HashMap::new();
    for cell in lib.cells() {
        let n = cell.arity();
        let bits = cell.truth_bits();
        for perm in permutations(n) {
            let mut tt = 0u16;
            for r in 0..(1usize << n) {
                let row: usize = (0..n).map(|p| ((r >> perm[p]) & 1) << p).sum();
                if (bits >> row) & 1 == 1 {
                    tt |= 1 << r;
                }
            }
            table.entry((n, tt)).or_default().push(CellMatch { cell: cell.name.clone(), perm });
        }
    }
    table
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[derive(Clone, Debug)]
struct Choice {
    cut: Cut,
    cell: String,
    /// node wired to each pin
    pins: Vec<NodeId>,
}

/// Maps `g` onto library cells. Returns the netlist and, for every node
/// that became a cell output, the cut it covers.
pub fn map_to_cells(g: &Aig, lib: &CellLibrary, k: usize) -> Result<(PmNetlist, BTreeMap<NodeId, Cut>)> {
    if g.gate(g.output()).is_pi() {
        return Err(Error::Unmappable("output is a primary input".into()));
    }
    let cuts = enumerate_cuts(g, k);
    let table = match_table(lib);
    let mut cost = vec![0usize; g.len()];
    let mut choice: Vec<Option<Choice>> = vec![None; g.len()];
    for (n, gate) in g.gates().iter().enumerate() {
        if gate.is_pi() {
            continue;
        }
        let mut best: Option<(usize, Choice)> = None;
        for cut in cuts[n].iter().filter(|c| !c.is_trivial()) {
            let tt = cut_truth(g, cut);
            let Some(matches) = table.get(&(cut.leaves.len(), tt)) else { continue };
            let c = 1 + cut.leaves.iter().map(|&l| cost[l]).sum::<usize>();
            for m in matches {
                let cand = Choice {
                    cut: cut.clone(),
                    cell: m.cell.clone(),
                    pins: m.perm.iter().map(|&i| cut.leaves[i]).collect(),
                };
                let better = match &best {
                    None => true,
                    Some((bc, b)) => {
                        (c, &cand.cell, &cand.cut.leaves, &cand.pins) < (*bc, &b.cell, &b.cut.leaves, &b.pins)
                    }
                };
                if better {
                    best = Some((c, cand));
                }
            }
        }
        let (c, ch) = match best {
            Some(b) => b,
            None => structural_choice(g, n, lib, &cost)?,
        };
        cost[n] = c;
        choice[n] = Some(ch);
    }

    let mut needed = vec![false; g.len()];
    needed[g.output()] = true;
    for n in (0..g.len()).rev() {
        if needed[n] {
            if let Some(ch) = &choice[n] {
                for &l in &ch.cut.leaves {
                    if !g.gate(l).is_pi() {
                        needed[l] = true;
                    }
                }
            }
        }
    }
    let pi_index: HashMap<NodeId, usize> = g.pis().into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut cell_of = HashMap::new();
    let mut cells = Vec::new();
    let mut coverage = BTreeMap::new();
    for n in (0..g.len()).filter(|&n| needed[n]) {
        let ch = choice[n].as_ref().expect("needed nodes are gates");
        let fanins = ch
            .pins
            .iter()
            .map(|&p| match pi_index.get(&p) {
                Some(&i) => Signal::Input(i),
                None => Signal::Cell(cell_of[&p]),
            })
            .collect();
        cell_of.insert(n, cells.len());
        cells.push(PmCell { kind: ch.cell.clone(), fanins });
        coverage.insert(n, ch.cut.clone());
    }
    let pm = PmNetlist::new(g.num_pis(), cells, cell_of[&g.output()], lib)?;
    Ok((pm, coverage))
}

/// One cell per gate: `AND2` on an `AND`'s fanins, `INV` on a `NOT`'s.
fn structural_choice(g: &Aig, n: NodeId, lib: &CellLibrary, cost: &[usize]) -> Result<(usize, Choice)> {
    let (cell, pins) = match g.gate(n) {
        Gate::And(a, b) => ("AND2", vec![a, b]),
        Gate::Not(a) => ("INV", vec![a]),
        Gate::Pi => unreachable!("inputs are not mapped"),
    };
    if lib.get(cell).is_none() {
        return Err(Error::Unmappable(format!("node {n}: no cell matches and the library lacks {cell}")));
    }
    let mut leaves = pins.clone();
    leaves.sort_unstable();
    leaves.dedup();
    let c = 1 + leaves.iter().map(|&l| cost[l]).sum::<usize>();
    Ok((c, Choice { cut: Cut { root: n, leaves }, cell: cell.to_string(), pins }))
}

/// Which PM cell produced each node of an expanded AIG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMap {
    /// Instantiating cell of every node; `None` for primary inputs.
    pub owner: Vec<Option<CellId>>,
    /// Cells whose template nodes all vanished in cleanup, with the node
    /// that carries their output.
    pub adopted: Vec<(CellId, NodeId)>,
    /// Expanded primary input id -> PM input index.
    pub pi_map: Vec<(NodeId, usize)>,
}

impl NodeMap {
    /// All cells a node stands for.
    pub fn cells_of(&self, node: NodeId) -> Vec<CellId> {
        let mut cells: Vec<CellId> = self.owner[node].into_iter().collect();
        cells.extend(self.adopted.iter().filter(|&&(_, n)| n == node).map(|&(c, _)| c));
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// `(node, cell)` pairs sorted by node then cell.
    pub fn pairs(&self) -> Vec<(NodeId, CellId)> {
        let mut pairs: Vec<(NodeId, CellId)> =
            self.owner.iter().enumerate().filter_map(|(n, c)| c.map(|c| (n, c))).collect();
        pairs.extend(self.adopted.iter().map(|&(c, n)| (n, c)));
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn digest(&self) -> String {
        sha256_hex(crate::text::write_phi(self).as_bytes())
    }

    /// Totality on gates, cell coverage and input bijectivity.
    pub fn check(&self, aig: &Aig, pm: &PmNetlist) -> Vec<String> {
        let mut problems = Vec::new();
        if self.owner.len() != aig.len() {
            problems.push(format!("map covers {} nodes, graph has {}", self.owner.len(), aig.len()));
            return problems;
        }
        for (n, gate) in aig.gates().iter().enumerate() {
            match (gate.is_pi(), self.owner[n]) {
                (false, None) => problems.push(format!("node {n} has no cell")),
                (true, Some(_)) => problems.push(format!("input node {n} has an owner")),
                (_, Some(c)) if c >= pm.len() => problems.push(format!("node {n} maps to missing cell {c}")),
                _ => {}
            }
        }
        let mut covered = vec![false; pm.len()];
        for (_, c) in self.pairs() {
            if c < covered.len() {
                covered[c] = true;
            }
        }
        for (c, ok) in covered.iter().enumerate() {
            if !ok {
                problems.push(format!("cell {c} has no node"));
            }
        }
        let mut pis: Vec<NodeId> = self.pi_map.iter().map(|&(n, _)| n).collect();
        let mut inputs: Vec<usize> = self.pi_map.iter().map(|&(_, i)| i).collect();
        pis.sort_unstable();
        inputs.sort_unstable();
        if pis != aig.pis() || inputs != (0..pm.num_inputs()).collect::<Vec<_>>() {
            problems.push("input map is not a bijection".into());
        }
        problems
    }
}

/// Replaces every cell by its template.
pub fn expand(pm: &PmNetlist, lib: &CellLibrary) -> Result<(Aig, NodeMap)> {
    let report = pm.validate(lib);
    if !report.is_empty() {
        return Err(Error::InvalidNetlist(report.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")));
    }
    let mut b = AigBuilder::new();
    let inputs: Vec<NodeId> = (0..pm.num_inputs()).map(|_| b.pi()).collect();
    let mut owner: Vec<Option<CellId>> = vec![None; inputs.len()];
    let mut cell_out: Vec<NodeId> = Vec::with_capacity(pm.len());
    for (c, cell) in pm.cells().iter().enumerate() {
        let template = &lib.get(&cell.kind).expect("validated").template;
        let mut tmap: Vec<NodeId> = Vec::with_capacity(template.len());
        let mut pin = 0;
        for gate in template.gates() {
            let before = b.len();
            let id = match *gate {
                Gate::Pi => {
                    let s = match cell.fanins[pin] {
                        Signal::Input(i) => inputs[i],
                        Signal::Cell(d) => cell_out[d],
                    };
                    pin += 1;
                    s
                }
                Gate::Not(x) => b.not(tmap[x]),
                Gate::And(x, y) => b.and(tmap[x], tmap[y]),
            };
            if b.len() > before {
                owner.push(Some(c));
            }
            tmap.push(id);
        }
        cell_out.push(tmap[template.output()]);
    }
    let raw: Vec<Gate> = (0..b.len()).map(|i| b.gate(i)).collect();
    let (aig, map) = b.finish_with_map(cell_out[pm.output()]);

    let mut new_owner = vec![None; aig.len()];
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = *new {
            new_owner[new] = owner[old];
        }
    }
    let mut has_node = vec![false; pm.len()];
    for c in new_owner.iter().flatten() {
        has_node[*c] = true;
    }
    let mut adopted = Vec::new();
    for (c, present) in has_node.iter().enumerate() {
        if !present {
            let mut x = cell_out[c];
            while map[x].is_none() {
                x = raw[x].fanins().next().expect("vanished nodes are gates");
            }
            adopted.push((c, map[x].expect("loop exits on a survivor")));
        }
    }
    let pi_map = inputs.iter().enumerate().map(|(i, &n)| (map[n].expect("inputs are used"), i)).collect();
    Ok((aig, NodeMap { owner: new_owner, adopted, pi_map }))
}
