//! Functional fingerprints and the equivalence oracle.
//!
//! Up to [`EXHAUSTIVE_CAP`] inputs the full truth table is computed with
//! 64-row bit-parallel words and equivalence is decided exactly. Beyond the
//! cap, random-pattern signatures give a one-sided answer: a mismatch is a
//! proof of inequivalence, a match is only "probably equivalent".
//!
//! Row `r` of a table assigns input `input_order[j]` the value of bit `j` of
//! `r`, so the first input is the least significant.
//!
//! Signature patterns come from splitmix64 seeded with the caller's seed:
//! for every input position `j` (outer) and every 64-pattern word `w`
//! (inner), one `splitmix64` output supplies the bits of patterns
//! `64w..64w+63` for that input. Pattern `p` is bit `p % 64` of word `p / 64`.

use std::collections::HashMap;

use crate::aig::{Aig, Gate, NodeId};
use crate::error::{Error, Result};
use crate::rng::splitmix64;

pub const EXHAUSTIVE_CAP: usize = 16;
pub const MIN_PATTERNS: usize = 1024;
/// Seed and pattern count used by [`equiv`] when it falls back to signatures.
pub const FALLBACK_SEED: u64 = 0x5EED_F00D;
pub const FALLBACK_PATTERNS: usize = 4096;

const VAR_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    input_order: Vec<NodeId>,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn input_order(&self) -> &[NodeId] {
        &self.input_order
    }

    pub fn num_inputs(&self) -> usize {
        self.input_order.len()
    }

    pub fn num_rows(&self) -> usize {
        1 << self.input_order.len()
    }

    pub fn bit(&self, row: usize) -> bool {
        (self.words[row / 64] >> (row % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Rows as `'0'`/`'1'` characters, row 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.num_rows()).map(|r| if self.bit(r) { '1' } else { '0' }).collect()
    }

    /// First row where the two tables differ.
    pub fn first_difference(&self, other: &TruthTable) -> Option<usize> {
        for (w, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let diff = a ^ b;
            if diff != 0 {
                return Some(w * 64 + diff.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Equality of the function bits only, ignoring input names.
    pub fn same_function(&self, other: &TruthTable) -> bool {
        self.words == other.words
    }
}

fn tail_mask(rows: usize) -> u64 {
    if rows >= 64 {
        u64::MAX
    } else {
        (1u64 << rows) - 1
    }
}

fn check_order(g: &Aig, input_order: &[NodeId]) -> Result<()> {
    let mut pis = g.pis();
    let mut given = input_order.to_vec();
    pis.sort_unstable();
    given.sort_unstable();
    if pis != given {
        return Err(Error::BadAlignment(format!(
            "input order {input_order:?} is not a permutation of the primary inputs {pis:?}"
        )));
    }
    Ok(())
}

/// Bit-parallel simulation: `pattern(j, w)` gives word `w` of the input at
/// position `j` of `input_order`. Returns the output words.
fn simulate_words(
    g: &Aig,
    input_order: &[NodeId],
    nwords: usize,
    mut pattern: impl FnMut(usize, usize) -> u64,
) -> Vec<u64> {
    let mut position = vec![usize::MAX; g.len()];
    for (j, &pi) in input_order.iter().enumerate() {
        position[pi] = j;
    }
    let mut values: Vec<Vec<u64>> = Vec::with_capacity(g.len());
    for (id, gate) in g.gates().iter().enumerate() {
        let v = match *gate {
            Gate::Pi => (0..nwords).map(|w| pattern(position[id], w)).collect(),
            Gate::Not(x) => values[x].iter().map(|v| !v).collect(),
            Gate::And(x, y) => values[x].iter().zip(&values[y]).map(|(a, b)| a & b).collect(),
        };
        values.push(v);
    }
    values.swap_remove(g.output())
}

pub fn truth_table(g: &Aig, input_order: &[NodeId]) -> Result<TruthTable> {
    let n = input_order.len();
    if n > EXHAUSTIVE_CAP {
        return Err(Error::TooManyInputs(n));
    }
    check_order(g, input_order)?;
    let rows = 1usize << n;
    let nwords = rows.div_ceil(64);
    let mut words = simulate_words(g, input_order, nwords, |j, w| {
        if j < 6 {
            VAR_MASKS[j]
        } else if (w >> (j - 6)) & 1 == 1 {
            u64::MAX
        } else {
            0
        }
    });
    if let Some(last) = words.last_mut() {
        *last &= tail_mask(rows);
    }
    Ok(TruthTable { input_order: input_order.to_vec(), words })
}

/// Truth table over the primary inputs in id order.
pub fn truth_table_default(g: &Aig) -> Result<TruthTable> {
    truth_table(g, &g.pis())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub input_order: Vec<NodeId>,
    pub seed: u64,
    pub pattern_count: usize,
    bits: Vec<u64>,
}

impl Signature {
    pub fn bit(&self, pattern: usize) -> bool {
        (self.bits[pattern / 64] >> (pattern % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Input words of the documented pattern generator, indexed `[j][w]`.
fn pattern_words(seed: u64, inputs: usize, nwords: usize) -> Vec<Vec<u64>> {
    let mut state = seed;
    (0..inputs).map(|_| (0..nwords).map(|_| splitmix64(&mut state)).collect()).collect()
}

pub fn random_signature(g: &Aig, seed: u64, pattern_count: usize) -> Result<Signature> {
    random_signature_with_order(g, &g.pis(), seed, pattern_count)
}

pub fn random_signature_with_order(
    g: &Aig,
    input_order: &[NodeId],
    seed: u64,
    pattern_count: usize,
) -> Result<Signature> {
    if pattern_count < MIN_PATTERNS {
        return Err(Error::TooFewPatterns(pattern_count));
    }
    check_order(g, input_order)?;
    let nwords = pattern_count.div_ceil(64);
    let patterns = pattern_words(seed, input_order.len(), nwords);
    let mut bits = simulate_words(g, input_order, nwords, |j, w| patterns[j][w]);
    if let Some(last) = bits.last_mut() {
        *last &= tail_mask(pattern_count - (nwords - 1) * 64);
    }
    Ok(Signature { input_order: input_order.to_vec(), seed, pattern_count, bits })
}

/// Evaluates `g` on one assignment, given as a value per primary input id.
pub fn eval(g: &Aig, assignment: &HashMap<NodeId, bool>) -> bool {
    let mut v = vec![false; g.len()];
    for (id, gate) in g.gates().iter().enumerate() {
        v[id] = match *gate {
            Gate::Pi => assignment.get(&id).copied().unwrap_or(false),
            Gate::Not(x) => !v[x],
            Gate::And(x, y) => v[x] && v[y],
        };
    }
    v[g.output()]
}

/// An input assignment on which two circuits disagree, keyed by the first
/// circuit's primary inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub assignment: Vec<(NodeId, bool)>,
}

impl Witness {
    /// Translates the assignment onto the second circuit's inputs.
    pub fn for_second(&self, alignment: &[(NodeId, NodeId)]) -> HashMap<NodeId, bool> {
        let lookup: HashMap<_, _> = self.assignment.iter().copied().collect();
        alignment.iter().map(|&(a, b)| (b, lookup[&a])).collect()
    }

    pub fn for_first(&self) -> HashMap<NodeId, bool> {
        self.assignment.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    NotEquivalent(Witness),
    ProbablyEquivalent,
}

impl Equivalence {
    /// True unless a counterexample was found.
    pub fn holds(&self) -> bool {
        !matches!(self, Equivalence::NotEquivalent(_))
    }
}

/// Pairs the i-th primary input of `a` with the i-th primary input of `b`.
pub fn positional_alignment(a: &Aig, b: &Aig) -> Vec<(NodeId, NodeId)> {
    a.pis().into_iter().zip(b.pis()).collect()
}

fn aligned_orders(a: &Aig, b: &Aig, alignment: &[(NodeId, NodeId)]) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    let pa = a.pis();
    let pb = b.pis();
    if pa.len() != pb.len() || alignment.len() != pa.len() {
        return Err(Error::BadAlignment(format!(
            "{} pairs for {} and {} primary inputs",
            alignment.len(),
            pa.len(),
            pb.len()
        )));
    }
    let mut seen_a = vec![false; a.len()];
    let mut seen_b = vec![false; b.len()];
    for &(x, y) in alignment {
        if x >= a.len() || !a.gate(x).is_pi() || y >= b.len() || !b.gate(y).is_pi() {
            return Err(Error::BadAlignment(format!("pair ({x}, {y}) is not between primary inputs")));
        }
        if seen_a[x] || seen_b[y] {
            return Err(Error::BadAlignment(format!("pair ({x}, {y}) reuses an input")));
        }
        seen_a[x] = true;
        seen_b[y] = true;
    }
    Ok(alignment.iter().copied().unzip())
}

/// Decides functional equivalence under an explicit input correspondence,
/// exhaustively when the input count allows, by signature otherwise.
pub fn equiv(a: &Aig, b: &Aig, alignment: &[(NodeId, NodeId)]) -> Result<Equivalence> {
    let (order_a, order_b) = aligned_orders(a, b, alignment)?;
    if order_a.len() > EXHAUSTIVE_CAP {
        return equiv_by_signature(a, b, alignment, FALLBACK_SEED, FALLBACK_PATTERNS);
    }
    let ta = truth_table(a, &order_a)?;
    let tb = truth_table(b, &order_b)?;
    Ok(match ta.first_difference(&tb) {
        None => Equivalence::Equivalent,
        Some(row) => Equivalence::NotEquivalent(Witness {
            assignment: order_a.iter().enumerate().map(|(j, &pi)| (pi, (row >> j) & 1 == 1)).collect(),
        }),
    })
}

/// Signature comparison; never answers `Equivalent`.
pub fn equiv_by_signature(
    a: &Aig,
    b: &Aig,
    alignment: &[(NodeId, NodeId)],
    seed: u64,
    pattern_count: usize,
) -> Result<Equivalence> {
    let (order_a, order_b) = aligned_orders(a, b, alignment)?;
    let sa = random_signature_with_order(a, &order_a, seed, pattern_count)?;
    let sb = random_signature_with_order(b, &order_b, seed, pattern_count)?;
    for (w, (x, y)) in sa.bits.iter().zip(&sb.bits).enumerate() {
        let diff = x ^ y;
        if diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            let patterns = pattern_words(seed, order_a.len(), w + 1);
            let assignment =
                order_a.iter().enumerate().map(|(j, &pi)| (pi, (patterns[j][w] >> bit) & 1 == 1)).collect();
            return Ok(Equivalence::NotEquivalent(Witness { assignment }));
        }
    }
    Ok(Equivalence::ProbablyEquivalent)
}

/// Equivalence with inputs paired by position.
pub fn equiv_positional(a: &Aig, b: &Aig) -> Result<Equivalence> {
    equiv(a, b, &positional_alignment(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;

    fn and2() -> Aig {
        let mut b = AigBuilder::new();
        let x = b.pi();
        let y = b.pi();
        let o = b.and(x, y);
        b.finish(o)
    }

    fn nand2() -> Aig {
        let mut b = AigBuilder::new();
        let x = b.pi();
        let y = b.pi();
        let o = b.and(x, y);
        let o = b.not(o);
        b.finish(o)
    }

    fn xor2() -> Aig {
        let mut b = AigBuilder::new();
        let x = b.pi();
        let y = b.pi();
        let ny = b.not(y);
        let nx = b.not(x);
        let l = b.and(x, ny);
        let r = b.and(nx, y);
        let o = b.or(l, r);
        b.finish(o)
    }

    #[test]
    fn small_tables() {
        assert_eq!(truth_table_default(&and2()).unwrap().to_bit_string(), "0001");
        assert_eq!(truth_table_default(&nand2()).unwrap().to_bit_string(), "1110");
        assert_eq!(truth_table_default(&xor2()).unwrap().to_bit_string(), "0110");
    }

    #[test]
    fn xor_table_matches_row_by_row_evaluation() {
        let g = xor2();
        let pis = g.pis();
        let tt = truth_table_default(&g).unwrap();
        for r in 0..4 {
            let asg = pis.iter().enumerate().map(|(j, &p)| (p, (r >> j) & 1 == 1)).collect();
            assert_eq!(tt.bit(r), eval(&g, &asg));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mut b = AigBuilder::new();
        let pis: Vec<_> = (0..17).map(|_| b.pi()).collect();
        let mut acc = pis[0];
        for &p in &pis[1..] {
            acc = b.and(acc, p);
        }
        let g = b.finish(acc);
        assert!(matches!(truth_table_default(&g), Err(Error::TooManyInputs(17))));
        // 16-input AND: exactly one row is true, the last.
        let mut b = AigBuilder::new();
        let pis: Vec<_> = (0..16).map(|_| b.pi()).collect();
        let mut acc = pis[0];
        for &p in &pis[1..] {
            acc = b.and(acc, p);
        }
        let g = b.finish(acc);
        let tt = truth_table_default(&g).unwrap();
        assert_eq!(tt.count_ones(), 1);
        assert!(tt.bit(65535));
    }

    #[test]
    fn commuted_and_is_equivalent() {
        let a = and2();
        let b = Aig::new(vec![crate::Gate::Pi, crate::Gate::Pi, crate::Gate::And(1, 0)], 2).unwrap();
        assert_eq!(equiv(&a, &b, &[(0, 0), (1, 1)]).unwrap(), Equivalence::Equivalent);
    }

    #[test]
    fn de_morgan_is_equivalent() {
        let mut b = AigBuilder::new();
        let x = b.pi();
        let y = b.pi();
        let nx = b.not(x);
        let ny = b.not(y);
        let o = b.or(nx, ny);
        let demorgan = b.finish(o);
        assert_eq!(equiv_positional(&nand2(), &demorgan).unwrap(), Equivalence::Equivalent);
    }

    #[test]
    fn wire_vs_inverter_has_witness() {
        let wire = Aig::new(vec![crate::Gate::Pi], 0).unwrap();
        let inv = Aig::new(vec![crate::Gate::Pi, crate::Gate::Not(0)], 1).unwrap();
        match equiv(&wire, &inv, &[(0, 0)]).unwrap() {
            Equivalence::NotEquivalent(w) => assert_eq!(w.assignment, vec![(0, false)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alignment_must_be_bijective() {
        let a = and2();
        assert!(matches!(equiv(&a, &a, &[(0, 0), (1, 0)]), Err(Error::BadAlignment(_))));
        assert!(matches!(equiv(&a, &a, &[(0, 0)]), Err(Error::BadAlignment(_))));
        assert!(matches!(equiv(&a, &a, &[(0, 0), (2, 1)]), Err(Error::BadAlignment(_))));
    }

    #[test]
    fn signature_is_deterministic_and_one_sided() {
        let g = and2();
        let s1 = random_signature(&g, 42, 4096).unwrap();
        let s2 = random_signature(&g, 42, 4096).unwrap();
        assert_eq!(s1, s2);
        assert!(matches!(random_signature(&g, 42, 1000), Err(Error::TooFewPatterns(1000))));
        let r = equiv_by_signature(&g, &g, &[(0, 0), (1, 1)], 9, 2048).unwrap();
        assert_eq!(r, Equivalence::ProbablyEquivalent);
        let r = equiv_by_signature(&g, &nand2(), &[(0, 0), (1, 1)], 9, 2048).unwrap();
        let Equivalence::NotEquivalent(w) = r else { panic!() };
        assert_ne!(eval(&g, &w.for_first()), eval(&nand2(), &w.for_second(&[(0, 0), (1, 1)])));
    }

    #[test]
    fn and_signature_density() {
        // P(a & b) = 1/4; with 4096 patterns the standard deviation of the
        // fraction is sqrt(0.25 * 0.75 / 4096) ~ 0.0068, so +-0.05 is > 7 sigma.
        let s = random_signature(&and2(), 1234, 4096).unwrap();
        let frac = s.count_ones() as f64 / 4096.0;
        assert!((frac - 0.25).abs() <= 0.05, "{frac}");
    }

    #[test]
    fn signature_ignores_gate_numbering() {
        // Same function and input order, gates interleaved differently.
        let a = Aig::new(
            vec![
                crate::Gate::Pi,
                crate::Gate::Pi,
                crate::Gate::Not(0),
                crate::Gate::Pi,
                crate::Gate::And(2, 1),
                crate::Gate::And(4, 3),
            ],
            5,
        )
        .unwrap();
        let b = Aig::new(
            vec![
                crate::Gate::Pi,
                crate::Gate::Not(0),
                crate::Gate::Pi,
                crate::Gate::And(1, 2),
                crate::Gate::Pi,
                crate::Gate::And(3, 4),
            ],
            5,
        )
        .unwrap();
        assert_eq!(random_signature(&a, 5, 1024).unwrap().words(), random_signature(&b, 5, 1024).unwrap().words());
    }
}
