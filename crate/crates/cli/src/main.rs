//! `funsub`: command-line access to the circuit toolkit.
//!
//! Exit status is 0 on success, 1 on invalid data or a negative check and 2
//! on usage errors. Every output file is written to a temporary file in the
//! target directory and renamed into place.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};

use funsub::dataset::{gen_stage1, gen_stage2, GenConfig};
use funsub::iso::{find_embedding_with, EmbedMode};
use funsub::metrics::{eval_stage1, eval_stage2, parse_predictions};
use funsub::properties::selfcheck;
use funsub::random::{random_aig, RandomAigParams};
use funsub::records::{read_stage, read_stage1, read_stage2, write_stage1, write_stage2};
use funsub::rng::{derive_seed, stable_hash};
use funsub::sample::{partition_khop, sample_with_retries, SampleParams};
use funsub::sim::{equiv_positional, Equivalence};
use funsub::synth::{apply_flow_with_retries, Flow, FLOW_NAMES, MAX_RETRIES};
use funsub::techmap::{expand, map_to_cells, DEFAULT_K};
use funsub::text::{parse_aig, parse_library, parse_pm, write_aig, write_library, write_phi, write_pm};
use funsub::{Aig, CellLibrary, PmNetlist};

#[derive(Parser)]
#[command(name = "funsub", version, about = "Functional subgraph matching toolkit for logic circuits")]
struct Cli {
    /// Cell library (.lib.txt); the built-in seven-cell library when absent.
    #[arg(long, global = true, env = "FUNSUB_LIB")]
    lib: Option<PathBuf>,

    /// Worker threads for parallel commands (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a circuit (.aig.txt), netlist (.pm.txt) or library (.lib.txt).
    Validate { file: PathBuf },
    /// Apply a named rewrite flow.
    Synth {
        #[arg(long)]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One of src_rw, src_rs, src_rws, resyn2rs, compress2rs.
        #[arg(long)]
        flow: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = MAX_RETRIES)]
        retries: usize,
    },
    /// Map a circuit onto library cells.
    Map {
        #[arg(long)]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Largest cut size (2 to 4).
        #[arg(long, default_value_t = DEFAULT_K as u8, value_parser = clap::value_parser!(u8).range(2..=4))]
        cut: u8,
    },
    /// Replace every cell of a netlist by its template.
    Expand {
        #[arg(long)]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the node-to-cell map.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Draw a random subgraph.
    Sample {
        #[arg(long)]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Also write the source node of every sample node (`-` for added inputs).
        #[arg(long)]
        origin: Option<PathBuf>,
    },
    /// Generate a labeled dataset from a directory of circuits.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        /// Directory with *.aig.txt (and, for stage 2, *.pm.txt) files.
        #[arg(long)]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Negatives per positive (stage 1).
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        /// Hop range of the cones circuits are cut into.
        #[arg(long, default_value = "8..12", value_parser = parse_range)]
        k: RangeInclusive<usize>,
        /// Use every circuit whole instead of cutting it into cones.
        #[arg(long)]
        whole: bool,
    },
    /// Search for a structural embedding of a query circuit in a target.
    Match {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Query inputs may only land on target inputs.
        #[arg(long)]
        anchored: bool,
    },
    /// Compare two circuits input by input; exits 1 with a witness when they differ.
    CheckEquiv { a: PathBuf, b: PathBuf },
    /// Score predictions against a dataset.
    Eval {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        /// One line per record: a probability (stage 1) or one per cell (stage 2).
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Run the property checks on random circuits; exits 1 on any failure.
    Selfcheck {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Write random circuits.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "6..12", value_parser = parse_range)]
        pis: RangeInclusive<usize>,
        #[arg(long, default_value = "30..200", value_parser = parse_range)]
        nodes: RangeInclusive<usize>,
    },
    /// Print the active cell library.
    Library,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: usize = hi.trim_start_matches('=').trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok(lo..=hi)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn load_aig(path: &Path) -> Result<Aig> {
    parse_aig(&read(path)?).with_context(|| path.display().to_string())
}

fn load_pm(path: &Path, lib: &CellLibrary) -> Result<PmNetlist> {
    parse_pm(&read(path)?, lib).with_context(|| path.display().to_string())
}

fn load_library(path: Option<&Path>) -> Result<CellLibrary> {
    match path {
        Some(p) => parse_library(&read(p)?).with_context(|| p.display().to_string()),
        None => Ok(CellLibrary::mini()),
    }
}

/// Files in `dir` ending in `suffix`, sorted by name.
fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path, suffix: &str) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    name.strip_suffix(suffix).unwrap_or(name).to_string()
}

fn run(cli: Cli) -> Result<ExitCode> {
    let lib_path = cli.lib.as_deref();
    match cli.command {
        Command::Validate { file } => validate(&file, lib_path),
        Command::Synth { r#in, out, flow, seed, retries } => {
            let g = load_aig(&r#in)?;
            let flow = Flow::named(&flow, seed).with_context(|| format!("known flows: {}", FLOW_NAMES.join(", ")))?;
            let syn = apply_flow_with_retries(&g, &flow, retries).with_context(|| r#in.display().to_string())?;
            write_atomic(&out, &write_aig(&syn))?;
            println!("{}: {} -> {} nodes, depth {} -> {}", flow.name, g.len(), syn.len(), g.depth(), syn.depth());
            Ok(ExitCode::SUCCESS)
        }
        Command::Map { r#in, out, cut } => {
            let lib = load_library(lib_path)?;
            let g = load_aig(&r#in)?;
            let (pm, _) = map_to_cells(&g, &lib, cut as usize).with_context(|| r#in.display().to_string())?;
            write_atomic(&out, &write_pm(&pm))?;
            println!("{} nodes -> {} cells, depth {}", g.len(), pm.len(), pm.depth());
            Ok(ExitCode::SUCCESS)
        }
        Command::Expand { r#in, out, phi } => {
            let lib = load_library(lib_path)?;
            let pm = load_pm(&r#in, &lib)?;
            let (aig, map) = expand(&pm, &lib)?;
            write_atomic(&out, &write_aig(&aig))?;
            if let Some(p) = phi {
                write_atomic(&p, &write_phi(&map))?;
            }
            println!("{} cells -> {} nodes", pm.len(), aig.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { r#in, out, seed, origin } => {
            let g = load_aig(&r#in)?;
            let s = sample_with_retries(&g, &SampleParams::new(seed), funsub::dataset::SAMPLE_ATTEMPTS)
                .with_context(|| r#in.display().to_string())?;
            write_atomic(&out, &write_aig(&s.aig))?;
            if let Some(p) = origin {
                let text: String = s
                    .origin
                    .iter()
                    .enumerate()
                    .map(|(i, o)| match o {
                        Some(n) => format!("n{i} n{n}\n"),
                        None => format!("n{i} -\n"),
                    })
                    .collect();
                write_atomic(&p, &text)?;
            }
            println!("{} of {} nodes", s.aig.len(), g.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { stage, r#in, out, seed, ratio, k, whole } => {
            let lib = load_library(lib_path)?;
            let cfg = GenConfig {
                sample: SampleParams { k_min: *k.start(), k_max: *k.end(), ..SampleParams::new(seed) },
                ratio,
                workers: cli.workers,
                cut_size: DEFAULT_K,
            };
            if !(ratio >= 0.0 && ratio.is_finite()) {
                bail!("--ratio must be a non-negative number, got {ratio}");
            }
            let bases = load_bases(&r#in, &cfg, whole)?;
            let (text, count, skipped) = if stage == 1 {
                let g = gen_stage1(&bases, &lib, &cfg)?;
                (write_stage1(&g.records), g.records.len(), g.skipped)
            } else {
                let mut pms = Vec::new();
                for p in files_with_suffix(&r#in, ".pm.txt")? {
                    pms.push((stem(&p, ".pm.txt"), load_pm(&p, &lib)?));
                }
                for (id, g) in &bases {
                    let (pm, _) = map_to_cells(g, &lib, cfg.cut_size).with_context(|| id.clone())?;
                    pms.push((id.clone(), pm));
                }
                let g = gen_stage2(&pms, &lib, &cfg)?;
                (write_stage2(&g.records), g.records.len(), g.skipped)
            };
            for (id, why) in &skipped {
                warn!("skipped {id}: {why}");
            }
            write_atomic(&out, &text)?;
            println!("{count} stage {stage} records from {} bases ({} skipped)", bases.len(), skipped.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Match { query, target, anchored } => {
            let q = load_aig(&query)?;
            let g = load_aig(&target)?;
            let mode = if anchored { EmbedMode::Anchored } else { EmbedMode::Cut };
            match find_embedding_with(&q, &g, mode) {
                Some(m) => {
                    println!("embedding found");
                    for (u, t) in m.pairs.iter().enumerate() {
                        println!("n{u} n{t}");
                    }
                }
                None => println!("no embedding"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckEquiv { a, b } => {
            let ga = load_aig(&a)?;
            let gb = load_aig(&b)?;
            match equiv_positional(&ga, &gb)? {
                Equivalence::Equivalent => {
                    println!("equivalent");
                    Ok(ExitCode::SUCCESS)
                }
                Equivalence::ProbablyEquivalent => {
                    println!("probably equivalent (random simulation; too many inputs for a proof)");
                    Ok(ExitCode::SUCCESS)
                }
                Equivalence::NotEquivalent(w) => {
                    let bits: Vec<String> =
                        w.assignment.iter().map(|&(n, v)| format!("n{n}={}", u8::from(v))).collect();
                    println!("not equivalent; witness on {}: {}", a.display(), bits.join(" "));
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Eval { stage, pred, data, report, threshold } => {
            let lib = load_library(lib_path)?;
            let text = read(&data)?;
            let found = read_stage(&text).with_context(|| data.display().to_string())?;
            if found != stage {
                bail!("{}: holds stage {found} records, --stage is {stage}", data.display());
            }
            let preds = parse_predictions(&read(&pred)?).with_context(|| pred.display().to_string())?;
            let json = if stage == 1 {
                let recs = read_stage1(&text, &lib).with_context(|| data.display().to_string())?;
                let labels: Vec<bool> = recs.iter().map(|r| r.label).collect();
                let r = eval_stage1(&labels, &preds, threshold).with_context(|| pred.display().to_string())?;
                serde_json::to_string_pretty(&r)?
            } else {
                let recs = read_stage2(&text, &lib).with_context(|| data.display().to_string())?;
                let labels: Vec<Vec<bool>> = recs.into_iter().map(|r| r.node_labels).collect();
                let r = eval_stage2(&labels, &preds, threshold).with_context(|| pred.display().to_string())?;
                serde_json::to_string_pretty(&r)?
            };
            write_atomic(&report, &(json.clone() + "\n"))?;
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Selfcheck { n, seed } => {
            let r = selfcheck(n, seed, cli.workers)?;
            println!("reflexivity   {}/{}", r.reflexivity, r.instances);
            println!("preservation  {}/{}", r.preservation, r.instances);
            println!("transitivity  {}/{}", r.transitivity, r.instances);
            println!("controls      {}/{} rejected", r.controls_rejected, r.controls);
            for f in &r.failures {
                println!("FAIL {f}");
            }
            Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Random { seed, count, out_dir, pis, nodes } => {
            if *pis.start() == 0 {
                bail!("--pis must start at 1 or more");
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let params = RandomAigParams::new(pis, nodes);
            for i in 0..count {
                let g = random_aig(&params, derive_seed(seed, i as u64));
                write_atomic(&out_dir.join(format!("rand{i:04}.aig.txt")), &write_aig(&g))?;
            }
            println!("{count} circuits in {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Library => {
            print!("{}", write_library(&load_library(lib_path)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn validate(file: &Path, lib_path: Option<&Path>) -> Result<ExitCode> {
    let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let text = read(file)?;
    let summary = if name.ends_with(".lib.txt") {
        parse_library(&text).map(|lib| format!("{} cells", lib.len()))
    } else if name.ends_with(".pm.txt") {
        let lib = load_library(lib_path)?;
        parse_pm(&text, &lib).map(|pm| format!("{} inputs, {} cells, depth {}", pm.num_inputs(), pm.len(), pm.depth()))
    } else {
        parse_aig(&text).map(|g| {
            format!("{} inputs, {} nodes, {} edges, depth {}", g.num_pis(), g.len(), g.edge_count(), g.depth())
        })
    };
    match summary {
        Ok(s) => {
            println!("{}: ok, {s}", file.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(funsub::Error::Invalid(violations)) => {
            for v in violations {
                println!("{}: {v}", file.display());
            }
            Ok(ExitCode::from(1))
        }
        Err(e) => {
            println!("{}: {e}", file.display());
            Ok(ExitCode::from(1))
        }
    }
}

/// Every `*.aig.txt` in `dir`, cut into k-hop cones unless `whole`.
fn load_bases(dir: &Path, cfg: &GenConfig, whole: bool) -> Result<Vec<(String, Aig)>> {
    let mut bases = Vec::new();
    for p in files_with_suffix(dir, ".aig.txt")? {
        let id = stem(&p, ".aig.txt");
        let g = load_aig(&p)?;
        if whole {
            bases.push((id, g));
            continue;
        }
        let params =
            SampleParams { seed: derive_seed(cfg.sample.seed, stable_hash(id.as_bytes())), ..cfg.sample.clone() };
        let cones = partition_khop(&g, &params)?;
        info!("{}: {} cones", p.display(), cones.len());
        for (k, cone) in cones.into_iter().enumerate() {
            bases.push((format!("{id}#{k}"), cone));
        }
    }
    Ok(bases)
}
