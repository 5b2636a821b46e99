//! Dataset record files (`.s1.recs`, `.s2.recs`).
//!
//! A header line `funsub-recs v1 stage=<1|2>` is followed by one JSON
//! object per line. Circuits are embedded as their canonical text.

use serde::{Deserialize, Serialize};

use crate::aig::Aig;
use crate::error::{Error, Result};
use crate::library::CellLibrary;
use crate::pm::PmNetlist;
use crate::text::{parse_aig, parse_pm, write_aig, write_pm};

pub const VERSION: &str = "v1";
pub const MAGIC: &str = "funsub-recs";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage1Record {
    pub sub: Aig,
    pub aig: Aig,
    pub syn: Aig,
    pub pm: PmNetlist,
    pub label: bool,
    pub pair_id: String,
    pub base_circuit_id: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage2Record {
    pub sub: Aig,
    pub pm: PmNetlist,
    /// One flag per PM cell, in cell order.
    pub node_labels: Vec<bool>,
    pub phi_digest: String,
    pub pair_id: String,
    pub base_circuit_id: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stage1Wire {
    sub: String,
    aig: String,
    syn: String,
    pm: String,
    label: u8,
    pair_id: String,
    base_circuit_id: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stage2Wire {
    sub: String,
    pm: String,
    node_labels: String,
    phi_digest: String,
    pair_id: String,
    base_circuit_id: String,
    seed: u64,
}

pub fn header(stage: u8) -> String {
    format!("{MAGIC} {VERSION} stage={stage}")
}

pub fn write_stage1(records: &[Stage1Record]) -> String {
    let mut out = header(1);
    out.push('\n');
    for r in records {
        let wire = Stage1Wire {
            sub: write_aig(&r.sub),
            aig: write_aig(&r.aig),
            syn: write_aig(&r.syn),
            pm: write_pm(&r.pm),
            label: r.label as u8,
            pair_id: r.pair_id.clone(),
            base_circuit_id: r.base_circuit_id.clone(),
            seed: r.seed,
        };
        out.push_str(&serde_json::to_string(&wire).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

pub fn write_stage2(records: &[Stage2Record]) -> String {
    let mut out = header(2);
    out.push('\n');
    for r in records {
        let wire = Stage2Wire {
            sub: write_aig(&r.sub),
            pm: write_pm(&r.pm),
            node_labels: r.node_labels.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            phi_digest: r.phi_digest.clone(),
            pair_id: r.pair_id.clone(),
            base_circuit_id: r.base_circuit_id.clone(),
            seed: r.seed,
        };
        out.push_str(&serde_json::to_string(&wire).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

/// Stage named in the header, after checking magic and version.
pub fn read_stage(text: &str) -> Result<u8> {
    let first = text.lines().next().unwrap_or("");
    let toks: Vec<&str> = first.split_whitespace().collect();
    if toks.first() != Some(&MAGIC) {
        return Err(Error::Version { expected: MAGIC.into(), found: first.to_string() });
    }
    if toks.get(1) != Some(&VERSION) {
        return Err(Error::Version { expected: VERSION.into(), found: toks.get(1).unwrap_or(&"").to_string() });
    }
    match toks.get(2).copied() {
        Some("stage=1") if toks.len() == 3 => Ok(1),
        Some("stage=2") if toks.len() == 3 => Ok(2),
        _ => Err(Error::Version { expected: "stage=1 or stage=2".into(), found: toks[2..].join(" ") }),
    }
}

fn body(text: &str, stage: u8) -> Result<Vec<&str>> {
    let found = read_stage(text)?;
    if found != stage {
        return Err(Error::Version { expected: format!("stage={stage}"), found: format!("stage={found}") });
    }
    if !text.ends_with('\n') {
        let index = text.lines().count().saturating_sub(2);
        return Err(Error::Record { index, msg: "truncated record (no terminating newline)".into() });
    }
    Ok(text.lines().skip(1).collect())
}

fn field_err(index: usize, what: &str, e: Error) -> Error {
    Error::Record { index, msg: format!("{what}: {e}") }
}

pub fn read_stage1(text: &str, lib: &CellLibrary) -> Result<Vec<Stage1Record>> {
    body(text, 1)?
        .into_iter()
        .enumerate()
        .map(|(index, line)| {
            let w: Stage1Wire = serde_json::from_str(line).map_err(|e| Error::Record { index, msg: e.to_string() })?;
            if w.label > 1 {
                return Err(Error::Record { index, msg: format!("label must be 0 or 1, got {}", w.label) });
            }
            Ok(Stage1Record {
                sub: parse_aig(&w.sub).map_err(|e| field_err(index, "sub", e))?,
                aig: parse_aig(&w.aig).map_err(|e| field_err(index, "aig", e))?,
                syn: parse_aig(&w.syn).map_err(|e| field_err(index, "syn", e))?,
                pm: parse_pm(&w.pm, lib).map_err(|e| field_err(index, "pm", e))?,
                label: w.label == 1,
                pair_id: w.pair_id,
                base_circuit_id: w.base_circuit_id,
                seed: w.seed,
            })
        })
        .collect()
}

pub fn read_stage2(text: &str, lib: &CellLibrary) -> Result<Vec<Stage2Record>> {
    body(text, 2)?
        .into_iter()
        .enumerate()
        .map(|(index, line)| {
            let w: Stage2Wire = serde_json::from_str(line).map_err(|e| Error::Record { index, msg: e.to_string() })?;
            let pm = parse_pm(&w.pm, lib).map_err(|e| field_err(index, "pm", e))?;
            let node_labels = w
                .node_labels
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::Record { index, msg: format!("bad label character `{c}`") }),
                })
                .collect::<Result<Vec<bool>>>()?;
            if node_labels.len() != pm.len() {
                return Err(Error::Record {
                    index,
                    msg: format!("{} labels for {} cells", node_labels.len(), pm.len()),
                });
            }
            Ok(Stage2Record {
                sub: parse_aig(&w.sub).map_err(|e| field_err(index, "sub", e))?,
                pm,
                node_labels,
                phi_digest: w.phi_digest,
                pair_id: w.pair_id,
                base_circuit_id: w.base_circuit_id,
                seed: w.seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_pm;

    fn lib() -> CellLibrary {
        CellLibrary::mini()
    }

    fn one() -> Stage1Record {
        let g = parse_aig("pi a\npi b\nand m a b\nnot o m\nout o\n").unwrap();
        Stage1Record {
            sub: parse_aig("pi a\nnot o a\nout o\n").unwrap(),
            aig: g.clone(),
            syn: g,
            pm: parse_pm("input a\ninput b\ncell c NAND2 a b\nout c\n", &lib()).unwrap(),
            label: true,
            pair_id: "x:p".into(),
            base_circuit_id: "x".into(),
            seed: u64::MAX,
        }
    }

    #[test]
    fn empty_file_is_header_only() {
        assert_eq!(write_stage1(&[]), "funsub-recs v1 stage=1\n");
        assert_eq!(read_stage1("funsub-recs v1 stage=1\n", &lib()).unwrap(), vec![]);
    }

    #[test]
    fn stage1_round_trip() {
        let text = write_stage1(&[one()]);
        assert_eq!(read_stage1(&text, &lib()).unwrap(), vec![one()]);
        assert_eq!(write_stage1(&read_stage1(&text, &lib()).unwrap()), text);
    }

    #[test]
    fn truncated_tail_names_record() {
        let text = write_stage1(&[one(), one()]);
        let cut = &text[..text.len() - 5];
        match read_stage1(cut, &lib()) {
            Err(Error::Record { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_refused() {
        match read_stage1("funsub-recs v2 stage=1\n", &lib()) {
            Err(Error::Version { expected, found }) => {
                assert_eq!(expected, "v1");
                assert_eq!(found, "v2");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_stage2("funsub-recs v1 stage=1\n", &lib()), Err(Error::Version { .. })));
    }

    #[test]
    fn stage2_labels_must_align() {
        let rec = Stage2Record {
            sub: parse_aig("pi a\nnot o a\nout o\n").unwrap(),
            pm: parse_pm("input a\ninput b\ncell c NAND2 a b\nout c\n", &lib()).unwrap(),
            node_labels: vec![true],
            phi_digest: "d".into(),
            pair_id: "p".into(),
            base_circuit_id: "b".into(),
            seed: 3,
        };
        let text = write_stage2(std::slice::from_ref(&rec));
        assert!(text.contains("\"node_labels\":\"1\""));
        assert_eq!(read_stage2(&text, &lib()).unwrap(), vec![rec]);
        let bad = text.replace("\"node_labels\":\"1\"", "\"node_labels\":\"10\"");
        assert!(matches!(read_stage2(&bad, &lib()), Err(Error::Record { index: 0, .. })));
    }
}
