//! Labeled record generation for both training stages.
//!
//! Every base circuit gets its own seed derived from the batch seed and a
//! hash of the circuit's canonical text, so the output does not depend on
//! how work is spread over threads.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::aig::{Aig, NodeId};
use crate::error::{Error, Result};
use crate::iso::find_embedding;
use crate::library::CellLibrary;
use crate::pm::PmNetlist;
use crate::records::{Stage1Record, Stage2Record};
use crate::rng::{derive_seed, rng_from, stable_hash};
use crate::sample::{sample_with_retries, Sample, SampleParams};
use crate::sim::equiv_positional;
use crate::synth::{apply_flow, Flow, FLOW_NAMES};
use crate::techmap::{expand, map_to_cells, NodeMap, DEFAULT_K};
use crate::text::{write_aig, write_pm};

/// Draws per base before a negative pairing is given up.
pub const NEGATIVE_DRAWS: usize = 6;
/// Sampling attempts before a base is skipped as degenerate.
pub const SAMPLE_ATTEMPTS: usize = 10;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub sample: SampleParams,
    /// Negatives per positive; the fractional part is a probability.
    pub ratio: f64,
    pub workers: usize,
    pub cut_size: usize,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        GenConfig { sample: SampleParams::new(seed), ratio: 1.0, workers: 1, cut_size: DEFAULT_K }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
    }
}

/// Records plus the bases that produced nothing, with the reason.
#[derive(Clone, Debug, Default)]
pub struct Generated<R> {
    pub records: Vec<R>,
    pub skipped: Vec<(String, String)>,
}

pub fn base_seed(seed: u64, canonical_text: &str) -> u64 {
    derive_seed(seed, stable_hash(canonical_text.as_bytes()))
}

/// The positive tuple built from one base circuit.
#[derive(Clone, Debug)]
pub struct Positive {
    pub id: String,
    pub seed: u64,
    pub sub: Aig,
    pub aig: Aig,
    pub syn: Aig,
    pub pm: PmNetlist,
    pub flow: String,
}

pub fn build_positive(id: &str, base: &Aig, lib: &CellLibrary, cfg: &GenConfig) -> Result<Positive> {
    let seed = base_seed(cfg.sample.seed, &write_aig(base));
    let params = SampleParams { seed: derive_seed(seed, 1), ..cfg.sample.clone() };
    let Sample { aig: sub, .. } = sample_with_retries(base, &params, SAMPLE_ATTEMPTS)?;
    let mut rng = rng_from(derive_seed(seed, 2));
    let flow_name = *FLOW_NAMES.choose(&mut rng).expect("flows exist");
    let syn = apply_flow(base, &Flow::named(flow_name, derive_seed(seed, 3))?)?;
    let (pm, _) = map_to_cells(&syn, lib, cfg.cut_size)?;
    Ok(Positive { id: id.to_string(), seed, sub, aig: base.clone(), syn, pm, flow: flow_name.to_string() })
}

/// The rule that makes a pairing positive: the query was cut from `base`
/// and `candidate` computes the same function as `base`.
pub fn positive_label(sub: &Aig, base: &Aig, candidate: &Aig) -> Result<bool> {
    Ok(find_embedding(sub, base).is_some() && equiv_positional(base, candidate)?.holds())
}

/// Stage 1: one positive per base and about `ratio` negatives, each pairing
/// the base's query with another base's circuits.
pub fn gen_stage1(bases: &[(String, Aig)], lib: &CellLibrary, cfg: &GenConfig) -> Result<Generated<Stage1Record>> {
    cfg.sample.check()?;
    if bases.len() < 2 {
        return Err(Error::CannotFormNegatives(bases.len()));
    }
    let pool = cfg.pool()?;
    let built: Vec<Result<Positive>> =
        pool.install(|| bases.par_iter().map(|(id, g)| build_positive(id, g, lib, cfg)).collect());
    let mut positives = Vec::new();
    let mut skipped = Vec::new();
    for (r, (id, _)) in built.into_iter().zip(bases) {
        match r {
            Ok(p) => positives.push(p),
            Err(e @ (Error::CannotRestructure(_) | Error::DegenerateSample(_) | Error::Unmappable(_))) => {
                skipped.push((id.clone(), e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    if positives.len() < 2 {
        return Err(Error::CannotFormNegatives(positives.len()));
    }
    let per_base: Vec<Vec<Stage1Record>> =
        pool.install(|| (0..positives.len()).into_par_iter().map(|i| records_for(i, &positives, cfg)).collect());
    Ok(Generated { records: per_base.into_iter().flatten().collect(), skipped })
}

fn records_for(i: usize, positives: &[Positive], cfg: &GenConfig) -> Vec<Stage1Record> {
    let p = &positives[i];
    let mut out = vec![Stage1Record {
        sub: p.sub.clone(),
        aig: p.aig.clone(),
        syn: p.syn.clone(),
        pm: p.pm.clone(),
        label: true,
        pair_id: format!("{}:pos", p.id),
        base_circuit_id: p.id.clone(),
        seed: p.seed,
    }];
    let mut rng = rng_from(derive_seed(p.seed, 4));
    let whole = cfg.ratio.floor() as usize;
    let wanted = whole + usize::from(rng.gen_bool((cfg.ratio - whole as f64).clamp(0.0, 1.0)));
    for k in 0..wanted {
        for _ in 0..NEGATIVE_DRAWS {
            let mut j = rng.gen_range(0..positives.len() - 1);
            if j >= i {
                j += 1;
            }
            let c = &positives[j];
            if find_embedding(&p.sub, &c.aig).is_some() || find_embedding(&p.sub, &c.syn).is_some() {
                continue;
            }
            out.push(Stage1Record {
                sub: p.sub.clone(),
                aig: c.aig.clone(),
                syn: c.syn.clone(),
                pm: c.pm.clone(),
                label: false,
                pair_id: format!("{}:neg{k}:{}", p.id, c.id),
                base_circuit_id: p.id.clone(),
                seed: p.seed,
            });
            break;
        }
    }
    out
}

/// Stage 2: expand each netlist, sample the expansion and flag every cell
/// that produced a sampled node.
pub fn gen_stage2(pms: &[(String, PmNetlist)], lib: &CellLibrary, cfg: &GenConfig) -> Result<Generated<Stage2Record>> {
    cfg.sample.check()?;
    let pool = cfg.pool()?;
    let built: Vec<Result<Stage2Record>> =
        pool.install(|| pms.par_iter().map(|(id, pm)| stage2_record(id, pm, lib, cfg)).collect());
    let mut out = Generated { records: Vec::new(), skipped: Vec::new() };
    for (r, (id, _)) in built.into_iter().zip(pms) {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(e @ Error::DegenerateSample(_)) => out.skipped.push((id.clone(), e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Flags every cell that produced one of the `kept` expanded nodes.
pub fn label_cells(phi: &NodeMap, kept: &[NodeId], cells: usize) -> Vec<bool> {
    let mut labels = vec![false; cells];
    for &n in kept {
        for c in phi.cells_of(n) {
            labels[c] = true;
        }
    }
    labels
}

pub fn stage2_record(id: &str, pm: &PmNetlist, lib: &CellLibrary, cfg: &GenConfig) -> Result<Stage2Record> {
    let seed = base_seed(cfg.sample.seed, &write_pm(pm));
    let (aig, phi) = expand(pm, lib)?;
    let params = SampleParams { seed: derive_seed(seed, 1), ..cfg.sample.clone() };
    let sample = sample_with_retries(&aig, &params, SAMPLE_ATTEMPTS)?;
    let node_labels = label_cells(&phi, &sample.kept(), pm.len());
    Ok(Stage2Record {
        sub: sample.aig,
        pm: pm.clone(),
        node_labels,
        phi_digest: phi.digest(),
        pair_id: format!("{id}:seg"),
        base_circuit_id: id.to_string(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_aig, RandomAigParams};
    use crate::records::{write_stage1, write_stage2};

    fn bases(n: usize) -> Vec<(String, Aig)> {
        let p = RandomAigParams::new(6..=10, 40..=80);
        (0..n).map(|i| (format!("b{i}"), random_aig(&p, 100 + i as u64))).collect()
    }

    #[test]
    fn two_bases_give_two_positives_and_two_negatives() {
        let out = gen_stage1(&bases(2), &CellLibrary::mini(), &GenConfig::new(5)).unwrap();
        assert_eq!(out.records.iter().filter(|r| r.label).count(), 2);
        assert_eq!(out.records.iter().filter(|r| !r.label).count(), 2);
    }

    #[test]
    fn one_base_cannot_form_negatives() {
        assert!(matches!(
            gen_stage1(&bases(1), &CellLibrary::mini(), &GenConfig::new(5)),
            Err(Error::CannotFormNegatives(1))
        ));
    }

    #[test]
    fn positives_recheck() {
        let out = gen_stage1(&bases(4), &CellLibrary::mini(), &GenConfig::new(9)).unwrap();
        for r in out.records.iter().filter(|r| r.label) {
            assert!(positive_label(&r.sub, &r.aig, &r.syn).unwrap());
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let lib = CellLibrary::mini();
        let b = bases(5);
        let one = gen_stage1(&b, &lib, &GenConfig::new(3)).unwrap();
        let four = gen_stage1(&b, &lib, &GenConfig { workers: 4, ..GenConfig::new(3) }).unwrap();
        assert_eq!(write_stage1(&one.records), write_stage1(&four.records));
    }

    #[test]
    fn stage2_labels_align_and_are_seeded() {
        let lib = CellLibrary::mini();
        let pms: Vec<(String, PmNetlist)> =
            bases(3).into_iter().map(|(id, g)| (id, map_to_cells(&g, &lib, 4).unwrap().0)).collect();
        let a = gen_stage2(&pms, &lib, &GenConfig::new(1)).unwrap();
        let b = gen_stage2(&pms, &lib, &GenConfig { workers: 3, ..GenConfig::new(1) }).unwrap();
        assert_eq!(write_stage2(&a.records), write_stage2(&b.records));
        for r in &a.records {
            assert_eq!(r.node_labels.len(), r.pm.len());
            assert!(r.node_labels.iter().any(|&x| x));
        }
    }
}
