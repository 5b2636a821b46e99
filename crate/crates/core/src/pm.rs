//! Post-mapping netlists: library cell instances wired to inputs and to
//! each other, with one designated output cell.

use std::fmt;

use crate::error::{Error, Result};
use crate::library::CellLibrary;

pub type CellId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    Input(usize),
    Cell(CellId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PmCell {
    pub kind: String,
    pub fanins: Vec<Signal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PmNetlist {
    inputs: usize,
    cells: Vec<PmCell>,
    output: CellId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PmViolation {
    pub cell: Option<CellId>,
    pub msg: String,
}

impl fmt::Display for PmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cell {
            Some(c) => write!(f, "cell {c}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

impl PmNetlist {
    pub fn from_parts_unchecked(inputs: usize, cells: Vec<PmCell>, output: CellId) -> PmNetlist {
        PmNetlist { inputs, cells, output }
    }

    pub fn new(inputs: usize, cells: Vec<PmCell>, output: CellId, lib: &CellLibrary) -> Result<PmNetlist> {
        let pm = PmNetlist { inputs, cells, output };
        let report = pm.validate(lib);
        if report.is_empty() {
            Ok(pm)
        } else {
            Err(Error::InvalidNetlist(report.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn cells(&self) -> &[PmCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn output(&self) -> CellId {
        self.output
    }

    /// Cells must only read inputs and earlier cells, match their library
    /// arity, and every cell and input must feed the output.
    pub fn validate(&self, lib: &CellLibrary) -> Vec<PmViolation> {
        let mut report = Vec::new();
        let n = self.cells.len();
        if n == 0 {
            report.push(PmViolation { cell: None, msg: "netlist has no cells".into() });
            return report;
        }
        if self.output >= n {
            report.push(PmViolation { cell: None, msg: format!("output cell {} out of range", self.output) });
        }
        let mut wiring_ok = true;
        for (id, cell) in self.cells.iter().enumerate() {
            match lib.get(&cell.kind) {
                None => report.push(PmViolation { cell: Some(id), msg: format!("unknown cell type {}", cell.kind) }),
                Some(def) if def.arity() != cell.fanins.len() => report.push(PmViolation {
                    cell: Some(id),
                    msg: format!("{} takes {} fanins, got {}", cell.kind, def.arity(), cell.fanins.len()),
                }),
                Some(_) => {}
            }
            for &f in &cell.fanins {
                match f {
                    Signal::Input(i) if i >= self.inputs => {
                        wiring_ok = false;
                        report.push(PmViolation { cell: Some(id), msg: format!("input {i} out of range") });
                    }
                    Signal::Cell(c) if c >= id => {
                        wiring_ok = false;
                        report.push(PmViolation {
                            cell: Some(id),
                            msg: format!("fanin cell {c} is not defined before its use"),
                        });
                    }
                    _ => {}
                }
            }
        }
        if wiring_ok && self.output < n {
            let (cells_live, inputs_live) = self.live();
            for (id, live) in cells_live.iter().enumerate() {
                if !live {
                    report.push(PmViolation { cell: Some(id), msg: "dead logic".into() });
                }
            }
            for (i, live) in inputs_live.iter().enumerate() {
                if !live {
                    report.push(PmViolation { cell: None, msg: format!("input {i} is unused") });
                }
            }
        }
        report
    }

    fn live(&self) -> (Vec<bool>, Vec<bool>) {
        let mut cells = vec![false; self.cells.len()];
        let mut inputs = vec![false; self.inputs];
        cells[self.output] = true;
        for id in (0..self.cells.len()).rev() {
            if !cells[id] {
                continue;
            }
            for &f in &self.cells[id].fanins {
                match f {
                    Signal::Input(i) => inputs[i] = true,
                    Signal::Cell(c) => cells[c] = true,
                }
            }
        }
        (cells, inputs)
    }

    /// Longest input-to-output path in cells.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.cells.len()];
        for (id, cell) in self.cells.iter().enumerate() {
            level[id] = 1 + cell
                .fanins
                .iter()
                .map(|f| match *f {
                    Signal::Input(_) => 0,
                    Signal::Cell(c) => level[c],
                })
                .max()
                .unwrap_or(0);
        }
        level.get(self.output).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_and_reachability_are_checked() {
        let lib = CellLibrary::mini();
        let bad = PmNetlist::from_parts_unchecked(
            2,
            vec![
                PmCell { kind: "AND2".into(), fanins: vec![Signal::Input(0)] },
                PmCell { kind: "INV".into(), fanins: vec![Signal::Input(0)] },
            ],
            1,
        );
        let report = bad.validate(&lib);
        assert!(report.iter().any(|v| v.msg.contains("takes 2 fanins")));
        assert!(report.iter().any(|v| v.cell == Some(0) && v.msg == "dead logic"));
        assert!(report.iter().any(|v| v.msg.contains("input 1 is unused")));
    }

    #[test]
    fn small_valid_netlist() {
        let lib = CellLibrary::mini();
        let pm = PmNetlist::new(
            2,
            vec![
                PmCell { kind: "NAND2".into(), fanins: vec![Signal::Input(0), Signal::Input(1)] },
                PmCell { kind: "INV".into(), fanins: vec![Signal::Cell(0)] },
            ],
            1,
            &lib,
        )
        .unwrap();
        assert_eq!(pm.depth(), 2);
    }
}
