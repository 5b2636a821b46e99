//! Text formats for circuits and the files derived from them.
//!
//! All writers emit canonical text (generated names, one statement per
//! line, definitions in id order), so writing a value twice gives identical
//! bytes and `write(parse(canonical)) == canonical`. The grammar is in
//! `docs/formats.md`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::aig::{Aig, Gate, NodeId};
use crate::error::{Error, Result};
use crate::library::{Cell, CellLibrary};
use crate::pm::{PmCell, PmNetlist, Signal};
use crate::techmap::NodeMap;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-blank, non-comment lines with their 1-based numbers.
fn statements(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_aig_statements<'a>(stmts: impl IntoIterator<Item = (usize, Vec<&'a str>)>) -> Result<Aig> {
    let mut ids: HashMap<&str, NodeId> = HashMap::new();
    let mut gates = Vec::new();
    let mut output: Option<(usize, NodeId)> = None;
    let mut last_line = 0;
    for (line, toks) in stmts {
        last_line = line;
        let lookup = |name: &str| -> Result<NodeId> {
            ids.get(name).copied().ok_or_else(|| parse_err(line, format!("undefined id `{name}`")))
        };
        let (gate, name) = match (toks[0], toks.len()) {
            ("pi", 2) => (Gate::Pi, toks[1]),
            ("not", 3) => (Gate::Not(lookup(toks[2])?), toks[1]),
            ("and", 4) => (Gate::And(lookup(toks[2])?, lookup(toks[3])?), toks[1]),
            ("out", 2) => {
                if output.is_some() {
                    return Err(parse_err(line, "second `out` statement"));
                }
                output = Some((line, lookup(toks[1])?));
                continue;
            }
            ("pi" | "not" | "and" | "out", n) => {
                return Err(parse_err(
                    line,
                    format!("`{}` takes {} operand(s), got {}", toks[0], arity_of(toks[0]), n - 1),
                ))
            }
            (kw, _) => return Err(parse_err(line, format!("unknown statement `{kw}`"))),
        };
        if ids.insert(name, gates.len()).is_some() {
            return Err(parse_err(line, format!("id `{name}` defined twice")));
        }
        gates.push(gate);
    }
    let (_, out) = output.ok_or_else(|| parse_err(last_line, "missing `out` statement"))?;
    Aig::new(gates, out)
}

fn arity_of(kw: &str) -> usize {
    match kw {
        "and" => 3,
        "not" => 2,
        _ => 1,
    }
}

pub fn parse_aig(text: &str) -> Result<Aig> {
    parse_aig_statements(statements(text))
}

pub fn write_aig(g: &Aig) -> String {
    let mut s = String::new();
    for (id, gate) in g.gates().iter().enumerate() {
        match *gate {
            Gate::Pi => writeln!(s, "pi n{id}"),
            Gate::Not(x) => writeln!(s, "not n{id} n{x}"),
            Gate::And(x, y) => writeln!(s, "and n{id} n{x} n{y}"),
        }
        .expect("write to String");
    }
    writeln!(s, "out n{}", g.output()).expect("write to String");
    s
}

/// Library text: `cell NAME ARITY TRUTH`, template statements, `end`.
pub fn parse_library(text: &str) -> Result<CellLibrary> {
    let mut cells = Vec::new();
    let mut stmts = statements(text);
    while let Some((line, toks)) = stmts.next() {
        if toks[0] != "cell" || toks.len() != 4 {
            return Err(parse_err(line, "expected `cell <name> <arity> <truth>`"));
        }
        let name = toks[1];
        let arity: usize = toks[2].parse().map_err(|_| parse_err(line, format!("bad arity `{}`", toks[2])))?;
        let truth = toks[3];
        if truth.len() != 1 << arity || !truth.bytes().all(|c| c == b'0' || c == b'1') {
            return Err(parse_err(line, format!("truth table `{truth}` is not {} bits", 1 << arity)));
        }
        let mut body = Vec::new();
        let mut closed = false;
        for (l, t) in stmts.by_ref() {
            if t == ["end"] {
                closed = true;
                break;
            }
            body.push((l, t));
        }
        if !closed {
            return Err(parse_err(line, format!("cell `{name}` has no `end`")));
        }
        let template = parse_aig_statements(body).map_err(|e| match e {
            Error::Parse { line, msg } => parse_err(line, format!("cell `{name}`: {msg}")),
            other => Error::LibraryCorrupt(format!("{name}: {other}")),
        })?;
        if template.num_pis() != arity {
            return Err(Error::LibraryCorrupt(format!(
                "{name} (arity {arity} but template has {} inputs)",
                template.num_pis()
            )));
        }
        cells.push(Cell::new(name, template, truth)?);
    }
    CellLibrary::new(cells)
}

pub fn write_library(lib: &CellLibrary) -> String {
    let mut s = String::new();
    for cell in lib.cells() {
        writeln!(s, "cell {} {} {}", cell.name, cell.arity(), cell.truth).expect("write to String");
        for l in write_aig(&cell.template).lines() {
            writeln!(s, "  {l}").expect("write to String");
        }
        s.push_str("end\n");
    }
    s
}

pub fn parse_pm(text: &str, lib: &CellLibrary) -> Result<PmNetlist> {
    let mut names: HashMap<&str, Signal> = HashMap::new();
    let mut inputs = 0usize;
    let mut cells = Vec::new();
    let mut output = None;
    let mut last_line = 0;
    for (line, toks) in statements(text) {
        last_line = line;
        let lookup = |name: &str| -> Result<Signal> {
            names.get(name).copied().ok_or_else(|| parse_err(line, format!("undefined id `{name}`")))
        };
        match toks[0] {
            "input" if toks.len() == 2 => {
                if !cells.is_empty() {
                    return Err(parse_err(line, "inputs must precede cells"));
                }
                if names.insert(toks[1], Signal::Input(inputs)).is_some() {
                    return Err(parse_err(line, format!("id `{}` defined twice", toks[1])));
                }
                inputs += 1;
            }
            "cell" if toks.len() >= 3 => {
                let kind = toks[2];
                let def = lib.get(kind).ok_or_else(|| parse_err(line, format!("unknown cell `{kind}`")))?;
                let fanins = toks[3..].iter().map(|t| lookup(t)).collect::<Result<Vec<_>>>()?;
                if fanins.len() != def.arity() {
                    return Err(parse_err(
                        line,
                        format!("cell `{kind}` takes {} fanins, got {}", def.arity(), fanins.len()),
                    ));
                }
                if names.insert(toks[1], Signal::Cell(cells.len())).is_some() {
                    return Err(parse_err(line, format!("id `{}` defined twice", toks[1])));
                }
                cells.push(PmCell { kind: kind.to_string(), fanins });
            }
            "out" if toks.len() == 2 => {
                if output.is_some() {
                    return Err(parse_err(line, "second `out` statement"));
                }
                match lookup(toks[1])? {
                    Signal::Cell(c) => output = Some(c),
                    Signal::Input(_) => return Err(parse_err(line, "output must be a cell")),
                }
            }
            kw => return Err(parse_err(line, format!("malformed `{kw}` statement"))),
        }
    }
    let output = output.ok_or_else(|| parse_err(last_line, "missing `out` statement"))?;
    PmNetlist::new(inputs, cells, output, lib)
}

pub fn write_pm(pm: &PmNetlist) -> String {
    let mut s = String::new();
    for i in 0..pm.num_inputs() {
        writeln!(s, "input i{i}").expect("write to String");
    }
    for (id, cell) in pm.cells().iter().enumerate() {
        write!(s, "cell c{id} {}", cell.kind).expect("write to String");
        for f in &cell.fanins {
            match f {
                Signal::Input(i) => write!(s, " i{i}"),
                Signal::Cell(c) => write!(s, " c{c}"),
            }
            .expect("write to String");
        }
        s.push('\n');
    }
    writeln!(s, "out c{}", pm.output()).expect("write to String");
    s
}

/// Node map as `aig_id cell_id` lines sorted by node then cell.
pub fn write_phi(map: &NodeMap) -> String {
    let mut s = String::new();
    for (node, cell) in map.pairs() {
        writeln!(s, "{node} {cell}").expect("write to String");
    }
    s
}

/// Reads `aig_id cell_id` pairs back.
pub fn parse_phi(text: &str) -> Result<Vec<(NodeId, usize)>> {
    statements(text)
        .map(|(line, toks)| {
            if toks.len() != 2 {
                return Err(parse_err(line, "expected `<aig_id> <cell_id>`"));
            }
            let a = toks[0].parse().map_err(|_| parse_err(line, format!("bad node id `{}`", toks[0])))?;
            let c = toks[1].parse().map_err(|_| parse_err(line, format!("bad cell id `{}`", toks[1])))?;
            Ok((a, c))
        })
        .collect()
}
