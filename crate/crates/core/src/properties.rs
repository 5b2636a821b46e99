//! Constructive checks of the functional-subgraph relation. Each check
//! rebuilds the witness the generators rely on.

use rayon::prelude::*;

use crate::aig::Aig;
use crate::dataset::positive_label;
use crate::error::{Error, Result};
use crate::iso::{find_embedding, EmbedMode, Mapping};
use crate::library::CellLibrary;
use crate::random::{random_aig, RandomAigParams};
use crate::rng::derive_seed;
use crate::sample::{sample_with_retries, SampleParams};
use crate::sim::equiv_positional;
use crate::synth::{apply_flow, Flow, FLOW_NAMES};
use crate::techmap::{expand, map_to_cells, DEFAULT_K};

/// `g` embeds into itself and the witness survives independent checking.
pub fn check_reflexivity(g: &Aig) -> bool {
    find_embedding(g, g).is_some_and(|m| reflexivity_witness_holds(g, &m))
}

pub fn reflexivity_witness_holds(g: &Aig, m: &Mapping) -> bool {
    m.verify(g, g, EmbedMode::Cut)
}

/// `sub` is labeled positive against every variant of `base`.
pub fn check_preservation(sub: &Aig, base: &Aig, variants: &[Aig]) -> Result<bool> {
    if find_embedding(sub, base).is_none() {
        return Err(Error::Precondition("query does not embed in the base".into()));
    }
    for (i, v) in variants.iter().enumerate() {
        if !equiv_positional(base, v)?.holds() {
            return Err(Error::Precondition(format!("variant {i} is not equivalent to the base")));
        }
    }
    for v in variants {
        if !positive_label(sub, base, v)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A sample of a sample of `g` embeds into `g`.
pub fn check_transitivity(g: &Aig, seed: u64) -> Result<bool> {
    let p1 = SampleParams::new(derive_seed(seed, 1));
    let s1 = sample_with_retries(g, &p1, 10)?;
    let p2 = SampleParams::new(derive_seed(seed, 2));
    let s2 = match sample_with_retries(&s1.aig, &p2, 10) {
        Ok(s) => s.aig,
        Err(Error::DegenerateSample(_)) => s1.aig,
        Err(e) => return Err(e),
    };
    Ok(transitivity_holds(&s2, g))
}

pub fn transitivity_holds(inner: &Aig, g: &Aig) -> bool {
    find_embedding(inner, g).is_some()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelfcheckReport {
    pub instances: usize,
    pub reflexivity: usize,
    pub preservation: usize,
    pub transitivity: usize,
    /// Negative controls that were correctly rejected.
    pub controls_rejected: usize,
    pub controls: usize,
    pub failures: Vec<String>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.reflexivity == self.instances
            && self.preservation == self.instances
            && self.transitivity == self.instances
            && self.controls_rejected == self.controls
    }
}

struct Outcome {
    reflexive: bool,
    preserved: bool,
    transitive: bool,
    controls: Vec<bool>,
    failures: Vec<String>,
}

/// Runs all three properties and their negative controls on `n` random
/// circuits.
pub fn selfcheck(n: usize, seed: u64, workers: usize) -> Result<SelfcheckReport> {
    let lib = CellLibrary::mini();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> =
        pool.install(|| (0..n).into_par_iter().map(|i| instance(i, derive_seed(seed, i as u64), &lib)).collect());
    let mut r = SelfcheckReport { instances: n, ..Default::default() };
    for o in outcomes {
        r.reflexivity += usize::from(o.reflexive);
        r.preservation += usize::from(o.preserved);
        r.transitivity += usize::from(o.transitive);
        r.controls += o.controls.len();
        r.controls_rejected += o.controls.iter().filter(|&&c| c).count();
        r.failures.extend(o.failures);
    }
    Ok(r)
}

fn instance(i: usize, seed: u64, lib: &CellLibrary) -> Outcome {
    let g = random_aig(&RandomAigParams::default(), seed);
    let mut failures = Vec::new();
    let mut fail = |what: &str, detail: String| failures.push(format!("instance {i} (seed {seed}): {what}: {detail}"));

    let reflexive = check_reflexivity(&g);
    if !reflexive {
        fail("reflexivity", "no self-embedding".into());
    }

    let mut variants = vec![g.clone()];
    let flow_name = FLOW_NAMES[i % FLOW_NAMES.len()];
    match Flow::named(flow_name, derive_seed(seed, 3)).and_then(|f| apply_flow(&g, &f)) {
        Ok(syn) => variants.push(syn),
        Err(Error::CannotRestructure(_)) => {}
        Err(e) => fail("preservation", format!("{flow_name}: {e}")),
    }
    match map_to_cells(&g, lib, DEFAULT_K).and_then(|(pm, _)| expand(&pm, lib)) {
        Ok((e, _)) => variants.push(e),
        Err(e) => fail("preservation", format!("techmap: {e}")),
    }
    let preserved = match sample_with_retries(&g, &SampleParams::new(derive_seed(seed, 4)), 10)
        .map_err(|e| e.to_string())
        .and_then(|s| check_preservation(&s.aig, &g, &variants).map_err(|e| e.to_string()))
    {
        Ok(true) => true,
        Ok(false) => {
            fail("preservation", "a variant was not labeled positive".into());
            false
        }
        Err(e) => {
            fail("preservation", e);
            false
        }
    };

    let transitive = match check_transitivity(&g, derive_seed(seed, 5)) {
        Ok(true) => true,
        Ok(false) => {
            fail("transitivity", "nested sample does not embed".into());
            false
        }
        Err(e) => {
            fail("transitivity", e.to_string());
            false
        }
    };

    let controls = vec![corrupted_mapping_rejected(&g), !transitivity_holds(&wider_than(&g), &g)];
    Outcome { reflexive, preserved, transitive, controls, failures }
}

/// Breaks the identity witness by sending two nodes to the same image.
fn corrupted_mapping_rejected(g: &Aig) -> bool {
    let mut pairs: Vec<usize> = (0..g.len()).collect();
    if pairs.len() < 2 {
        return true;
    }
    pairs[0] = pairs[1];
    !reflexivity_witness_holds(g, &Mapping { pairs })
}

/// A circuit with more inputs than `g` has nodes.
pub fn wider_than(g: &Aig) -> Aig {
    let mut b = crate::aig::AigBuilder::new();
    let pis: Vec<usize> = (0..=g.len()).map(|_| b.pi()).collect();
    let out = pis[1..].iter().fold(pis[0], |acc, &p| b.and(acc, p));
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_aig;

    #[test]
    fn relabeled_graph_is_reflexive() {
        let g = parse_aig("pi a\npi b\nand x a b\nnot o x\nout o\n").unwrap();
        assert!(check_reflexivity(&g));
    }

    #[test]
    fn non_equivalent_variant_is_a_precondition_error() {
        let g = parse_aig("pi a\npi b\nand o a b\nout o\n").unwrap();
        let h = parse_aig("pi a\npi b\nnot na a\nand o na b\nout o\n").unwrap();
        let sub = parse_aig("pi a\npi b\nand o a b\nout o\n").unwrap();
        assert!(check_preservation(&sub, &g, std::slice::from_ref(&g)).unwrap());
        assert!(matches!(check_preservation(&sub, &g, &[h]), Err(Error::Precondition(_))));
    }

    #[test]
    fn wide_circuit_never_embeds() {
        let g = parse_aig("pi a\npi b\nand o a b\nout o\n").unwrap();
        assert!(!transitivity_holds(&wider_than(&g), &g));
    }

    #[test]
    fn small_selfcheck_passes() {
        let r = selfcheck(8, 11, 2).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
