//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use funsub::aig::{Aig, Gate};
use funsub::dataset::{gen_stage1, gen_stage2, GenConfig};
use funsub::iso::{find_embedding_with, is_isomorphic, EmbedMode};
use funsub::metrics::{classification_metrics, segmentation_metrics, ConfusionCounts};
use funsub::properties::selfcheck;
use funsub::random::{random_aig, RandomAigParams};
use funsub::records::{write_stage1, write_stage2};
use funsub::rng::{derive_seed, rng_from};
use funsub::sample::{partition_khop, SampleParams};
use funsub::sim::truth_table_default;
use funsub::synth::{apply_flow, Flow, FLOW_NAMES, MAX_RETRIES};
use funsub::techmap::{expand, map_to_cells};
use funsub::{CellLibrary, Error, PmNetlist};

const SEED: u64 = 0xACCE_5757;
const CIRCUITS: usize = 500;
const EQUIV_BUDGET: Duration = Duration::from_secs(120);
const RESTRUCTURE_MIN: f64 = 0.95;
const ISO_PAIRS: usize = 200;
const ISO_MAX_TARGET: usize = 8;
const PROPERTY_INSTANCES: usize = 100;
const SET_PAIRS: usize = 10_000;
const RATIO_BAND: (f64, f64) = (0.4, 1.0);
const MEDIAN_BAND: (f64, f64) = (0.6, 0.95);

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn main() {
    let lib = CellLibrary::mini();
    let circuits: Vec<Aig> = (0..CIRCUITS)
        .into_par_iter()
        .map(|i| random_aig(&RandomAigParams::default(), derive_seed(SEED, i as u64)))
        .collect();

    let mut outcomes = Vec::new();
    let (equiv, restructure) = flows(&circuits);
    outcomes.push(equiv);
    outcomes.push(restructure);
    outcomes.push(techmap_round_trip(&circuits, &lib));
    outcomes.push(iso_oracle());
    outcomes.push(properties());
    outcomes.push(metrics());
    let (bases, pms) = corpus(&lib);
    outcomes.push(determinism(&bases, &pms, &lib));
    outcomes.push(shape(&bases, &lib));

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn flows(circuits: &[Aig]) -> (Outcome, Outcome) {
    let start = Instant::now();
    let jobs: Vec<(usize, &str)> = (0..circuits.len()).flat_map(|i| FLOW_NAMES.iter().map(move |&f| (i, f))).collect();
    let results: Vec<(bool, Option<bool>, Option<String>)> = jobs
        .par_iter()
        .map(|&(i, name)| {
            let g = &circuits[i];
            let flow = Flow::named(name, derive_seed(SEED ^ 0xF10, i as u64)).expect("known flow");
            match apply_flow(g, &flow) {
                Ok(syn) => {
                    let same = truth_table_default(g).unwrap().same_function(&truth_table_default(&syn).unwrap());
                    let restructured = !is_isomorphic(g, &syn);
                    (same, Some(restructured), None)
                }
                Err(Error::CannotRestructure(_)) => (true, None, None),
                Err(e) => (false, None, Some(format!("circuit {i} {name}: {e}"))),
            }
        })
        .collect();
    let elapsed = start.elapsed();
    let total = results.len();
    let equal = results.iter().filter(|r| r.0).count();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    let succeeded = results.iter().filter(|r| r.1.is_some()).count();
    let non_iso = results.iter().filter(|r| r.1 == Some(true)).count();
    let rate = succeeded as f64 / total as f64;
    let equiv = Outcome {
        name: "equivalence preservation",
        pass: equal == total && errors.is_empty() && elapsed < EQUIV_BUDGET,
        detail: format!(
            "{equal}/{total} flow applications truth-table equal, {} errors, {:.1}s (budget {}s)",
            errors.len(),
            elapsed.as_secs_f64(),
            EQUIV_BUDGET.as_secs()
        ),
    };
    let restructure = Outcome {
        name: "restructuring contract",
        pass: rate >= RESTRUCTURE_MIN && non_iso == succeeded && errors.is_empty(),
        detail: format!(
            "{succeeded}/{total} ({:.2}%) succeeded within {MAX_RETRIES} retries (min {:.0}%), {non_iso} verified non-isomorphic, {} clean failures",
            100.0 * rate,
            100.0 * RESTRUCTURE_MIN,
            total - succeeded - errors.len()
        ),
    };
    (equiv, restructure)
}

fn techmap_round_trip(circuits: &[Aig], lib: &CellLibrary) -> Outcome {
    let bad: Vec<String> = circuits
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let (pm, _) = match map_to_cells(g, lib, 4) {
                Ok(x) => x,
                Err(e) => return Some(format!("circuit {i}: map: {e}")),
            };
            let (e, phi) = match expand(&pm, lib) {
                Ok(x) => x,
                Err(e) => return Some(format!("circuit {i}: expand: {e}")),
            };
            if !truth_table_default(g).unwrap().same_function(&truth_table_default(&e).unwrap()) {
                return Some(format!("circuit {i}: expansion differs"));
            }
            let problems = phi.check(&e, &pm);
            if !problems.is_empty() {
                return Some(format!("circuit {i}: node map: {}", problems.join("; ")));
            }
            None
        })
        .collect();
    Outcome {
        name: "techmap round trip",
        pass: bad.is_empty(),
        detail: format!(
            "{}/{} expand(map(g)) equivalent with total, cell-covering node map{}",
            circuits.len() - bad.len(),
            circuits.len(),
            bad.first().map(|b| format!("; first failure: {b}")).unwrap_or_default()
        ),
    }
}

/// Every injective assignment, checked edge by edge.
fn brute_force_embeds(q: &Aig, g: &Aig, mode: EmbedMode) -> bool {
    fn holds(q: &Aig, g: &Aig, img: &[usize], mode: EmbedMode) -> bool {
        q.gates().iter().enumerate().all(|(u, gate)| match (*gate, g.gate(img[u])) {
            (Gate::Pi, t) => mode == EmbedMode::Cut || t.is_pi(),
            (Gate::Not(a), Gate::Not(c)) => img[a] == c,
            (Gate::And(a, b), Gate::And(c, d)) => {
                let mut x = [img[a], img[b]];
                let mut y = [c, d];
                x.sort_unstable();
                y.sort_unstable();
                x == y
            }
            _ => false,
        })
    }
    fn go(u: usize, q: &Aig, g: &Aig, img: &mut Vec<usize>, used: &mut [bool], mode: EmbedMode) -> bool {
        if u == q.len() {
            return holds(q, g, img, mode);
        }
        for t in 0..g.len() {
            if !used[t] {
                used[t] = true;
                img.push(t);
                let found = go(u + 1, q, g, img, used, mode);
                img.pop();
                used[t] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }
    q.len() <= g.len() && go(0, q, g, &mut Vec::new(), &mut vec![false; g.len()], mode)
}

fn iso_oracle() -> Outcome {
    let mut rng = rng_from(SEED ^ 0x150);
    let mut checked = 0;
    let mut agree = 0;
    let mut found = 0;
    let mut first_bad = None;
    for i in 0..ISO_PAIRS {
        let g = random_aig(&RandomAigParams::new(1..=3, 2..=ISO_MAX_TARGET), rng.gen());
        let q = if i % 2 == 0 {
            let s = funsub::sample::sample_subgraph(&g, rng.gen()).map(|s| s.aig);
            s.unwrap_or_else(|_| g.clone())
        } else {
            random_aig(&RandomAigParams::new(1..=3, 1..=5), rng.gen())
        };
        for mode in [EmbedMode::Cut, EmbedMode::Anchored] {
            let fast = find_embedding_with(&q, &g, mode);
            let slow = brute_force_embeds(&q, &g, mode);
            let witness_ok = fast.as_ref().is_none_or(|m| m.verify(&q, &g, mode));
            checked += 1;
            found += usize::from(slow);
            if fast.is_some() == slow && witness_ok {
                agree += 1;
            } else if first_bad.is_none() {
                first_bad = Some(format!("pair {i} {mode:?}"));
            }
        }
        let iso_slow = q.len() == g.len() && brute_force_embeds(&q, &g, EmbedMode::Anchored) && q.output_matches(&g);
        checked += 1;
        if is_isomorphic(&q, &g) == iso_slow {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("pair {i} isomorphism"));
        }
    }
    Outcome {
        name: "iso-match oracle",
        pass: agree == checked,
        detail: format!(
            "{agree}/{checked} answers agree with brute force over {ISO_PAIRS} pairs with |g| <= {ISO_MAX_TARGET} ({found} embeddings exist){}",
            first_bad.map(|b| format!("; first mismatch: {b}")).unwrap_or_default()
        ),
    }
}

trait OutputMatches {
    fn output_matches(&self, other: &Aig) -> bool;
}

impl OutputMatches for Aig {
    /// Some kind- and edge-preserving bijection also sends output to output.
    fn output_matches(&self, other: &Aig) -> bool {
        fn go(u: usize, q: &Aig, g: &Aig, img: &mut Vec<usize>, used: &mut [bool]) -> bool {
            if u == q.len() {
                return img[q.output()] == g.output()
                    && q.gates().iter().enumerate().all(|(v, gate)| match (*gate, g.gate(img[v])) {
                        (Gate::Pi, t) => t.is_pi(),
                        (Gate::Not(a), Gate::Not(c)) => img[a] == c,
                        (Gate::And(a, b), Gate::And(c, d)) => {
                            (img[a] == c && img[b] == d) || (img[a] == d && img[b] == c)
                        }
                        _ => false,
                    });
            }
            for t in 0..g.len() {
                if !used[t] {
                    used[t] = true;
                    img.push(t);
                    let ok = go(u + 1, q, g, img, used);
                    img.pop();
                    used[t] = false;
                    if ok {
                        return true;
                    }
                }
            }
            false
        }
        go(0, self, other, &mut Vec::new(), &mut vec![false; other.len()])
    }
}

fn properties() -> Outcome {
    let r = selfcheck(PROPERTY_INSTANCES, SEED ^ 0x9709, 0).expect("selfcheck runs");
    Outcome {
        name: "property suite",
        pass: r.passed() && r.instances == PROPERTY_INSTANCES,
        detail: format!(
            "reflexivity {}/{n}, preservation {}/{n}, transitivity {}/{n}, negative controls rejected {}/{}{}",
            r.reflexivity,
            r.preservation,
            r.transitivity,
            r.controls_rejected,
            r.controls,
            r.failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default(),
            n = r.instances
        ),
    }
}

fn metrics() -> Outcome {
    let mut problems = Vec::new();
    let m = classification_metrics(&ConfusionCounts { tp: 3, tn: 5, fp: 1, fn_: 1 }).unwrap();
    if (m.accuracy, m.precision, m.recall, m.f1) != (0.8, 0.75, 0.75, 0.75) {
        problems.push(format!("tp3 fp1 fn1 tn5 gave {m:?}"));
    }
    let m = classification_metrics(&ConfusionCounts { tp: 7, tn: 4, fp: 0, fn_: 0 }).unwrap();
    if (m.accuracy, m.precision, m.recall, m.f1) != (1.0, 1.0, 1.0, 1.0) {
        problems.push(format!("all-correct gave {m:?}"));
    }
    let m = classification_metrics(&ConfusionCounts { tp: 0, tn: 2, fp: 0, fn_: 2 }).unwrap();
    if (m.precision, m.recall, m.f1, m.precision_degenerate) != (0.0, 0.0, 0.0, true) {
        problems.push(format!("zero-denominator gave {m:?}"));
    }
    if classification_metrics(&ConfusionCounts::default()).is_ok() {
        problems.push("empty counts accepted".into());
    }
    let set = |xs: &[usize]| xs.iter().copied().collect::<BTreeSet<usize>>();
    let cases = [
        (set(&[1, 2, 3]), set(&[1, 2, 3]), 1.0, 1.0),
        (set(&[1, 2]), set(&[3]), 0.0, 0.0),
        (set(&[1, 2]), set(&[2, 3]), 1.0 / 3.0, 0.5),
    ];
    for (p, t, iou, dice) in &cases {
        let s = segmentation_metrics(p, t).unwrap();
        if s.iou != *iou || s.dice != *dice {
            problems.push(format!("{p:?} vs {t:?} gave {s:?}"));
        }
    }
    if segmentation_metrics(&set(&[]), &set(&[])).is_ok() {
        problems.push("two empty sets accepted".into());
    }
    let hand_cases = 5 + cases.len();
    let mut rng = rng_from(SEED ^ 0xD1CE);
    let mut violations = 0;
    let mut pairs = 0;
    while pairs < SET_PAIRS {
        let universe = rng.gen_range(1..40);
        let p: BTreeSet<usize> = (0..universe).filter(|_| rng.gen_bool(0.4)).collect();
        let t: BTreeSet<usize> = (0..universe).filter(|_| rng.gen_bool(0.4)).collect();
        let Ok(s) = segmentation_metrics(&p, &t) else { continue };
        pairs += 1;
        let equal_expected = p == t || p.is_disjoint(&t);
        let equal = (s.dice - s.iou).abs() < 1e-12;
        if s.dice < s.iou || equal != equal_expected {
            violations += 1;
        }
    }
    Outcome {
        name: "metrics identities",
        pass: problems.is_empty() && violations == 0,
        detail: format!(
            "{}/{hand_cases} hand cases exact{}, dice >= iou on {}/{SET_PAIRS} random set pairs",
            hand_cases - problems.len(),
            problems.first().map(|p| format!(" (first mismatch: {p})")).unwrap_or_default(),
            SET_PAIRS - violations
        ),
    }
}

/// Base cones cut from larger random circuits, and netlists mapped from them.
type Named<T> = Vec<(String, T)>;

fn corpus(lib: &CellLibrary) -> (Named<Aig>, Named<PmNetlist>) {
    let params = RandomAigParams { pis: 24..=48, nodes: 500..=900, ..RandomAigParams::default() };
    let mut bases = Vec::new();
    for c in 0..4u64 {
        let big = random_aig(&params, derive_seed(SEED ^ 0xB16, c));
        let cones = partition_khop(&big, &SampleParams::new(derive_seed(SEED ^ 0xC0E, c))).unwrap();
        for (k, cone) in cones.into_iter().enumerate().filter(|(_, g)| g.len() >= 16) {
            bases.push((format!("r{c}_cone{k}"), cone));
        }
    }
    let pms = bases.iter().map(|(id, g)| (id.clone(), map_to_cells(g, lib, 4).unwrap().0)).collect();
    (bases, pms)
}

fn determinism(bases: &[(String, Aig)], pms: &[(String, PmNetlist)], lib: &CellLibrary) -> Outcome {
    let run = |workers: usize| {
        let cfg = GenConfig { workers, ..GenConfig::new(SEED) };
        let s1 = write_stage1(&gen_stage1(bases, lib, &cfg).unwrap().records);
        let s2 = write_stage2(&gen_stage2(pms, lib, &cfg).unwrap().records);
        (s1, s2)
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    let same = a == b && a == c;
    Outcome {
        name: "pipeline determinism",
        pass: same,
        detail: format!(
            "stage 1 ({} bytes) and stage 2 ({} bytes) byte-identical across 2 runs and 1 vs 4 workers: {same}",
            a.0.len(),
            a.1.len()
        ),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn shape(bases: &[(String, Aig)], lib: &CellLibrary) -> Outcome {
    let out = gen_stage1(bases, lib, &GenConfig::new(SEED ^ 0x5A)).unwrap();
    let pos: Vec<_> = out.records.iter().filter(|r| r.label).collect();
    let mut ratios: Vec<f64> = pos.iter().map(|r| r.sub.len() as f64 / r.aig.len() as f64).collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let in_band = ratios.iter().filter(|&&r| (RATIO_BAND.0..=RATIO_BAND.1).contains(&r)).count();
    let sizes = |f: &dyn Fn(&funsub::records::Stage1Record) -> usize| {
        mean(&pos.iter().map(|r| f(r) as f64).collect::<Vec<_>>())
    };
    // Reference means (smallest and largest over the published splits), widened by 10x either way.
    let refs: [(&str, f64, f64, f64); 4] = [
        ("sub", sizes(&|r| r.sub.len()), 100.0, 248.0),
        ("aig", sizes(&|r| r.aig.len()), 132.0, 320.0),
        ("syn", sizes(&|r| r.syn.len()), 128.0, 315.0),
        ("pm", sizes(&|r| r.pm.len()), 69.0, 179.0),
    ];
    let magnitude_ok = refs.iter().all(|&(_, m, lo, hi)| m >= lo / 10.0 && m <= hi * 10.0);
    let pass = in_band == ratios.len() && (MEDIAN_BAND.0..=MEDIAN_BAND.1).contains(&median) && magnitude_ok;
    Outcome {
        name: "dataset shape",
        pass,
        detail: format!(
            "{in_band}/{} ratios in [{}, {}], median {median:.3} (band [{}, {}]), mean nodes {}",
            ratios.len(),
            RATIO_BAND.0,
            RATIO_BAND.1,
            MEDIAN_BAND.0,
            MEDIAN_BAND.1,
            refs.iter().map(|(n, m, lo, hi)| format!("{n} {m:.1} (ref {lo}-{hi})")).collect::<Vec<_>>().join(", ")
        ),
    }
}
