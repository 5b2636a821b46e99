//! Cell libraries: every cell is an AIG template plus its truth table.

use std::collections::BTreeMap;

use crate::aig::{Aig, AigBuilder, NodeId};
use crate::error::{Error, Result};
use crate::sim::truth_table_default;

/// Cells every library has to provide.
pub const REQUIRED_CELLS: [&str; 7] = ["INV", "AND2", "NAND2", "OR2", "NOR2", "XOR2", "AOI21"];

/// Functions the required cell names stand for.
pub fn standard_truth(name: &str) -> Option<&'static str> {
    Some(match name {
        "INV" => "10",
        "AND2" => "0001",
        "NAND2" => "1110",
        "OR2" => "0111",
        "NOR2" => "1000",
        "XOR2" => "0110",
        "AOI21" => "11100000",
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub name: String,
    /// Template; its primary inputs in id order are the cell pins.
    pub template: Aig,
    /// Output per row, row 0 first, pin 0 least significant.
    pub truth: String,
}

impl Cell {
    pub fn new(name: &str, template: Aig, truth: &str) -> Result<Cell> {
        let violations = template.validate();
        if !violations.is_empty() {
            return Err(Error::LibraryCorrupt(format!("{name}: template invalid: {}", Error::Invalid(violations))));
        }
        if let Some(expected) = standard_truth(name) {
            if truth != expected {
                return Err(Error::LibraryCorrupt(format!("{name} (declared {truth}, {name} computes {expected})")));
            }
        }
        let simulated =
            truth_table_default(&template).map_err(|e| Error::LibraryCorrupt(format!("{name}: {e}")))?.to_bit_string();
        if simulated != truth {
            return Err(Error::LibraryCorrupt(format!("{name} (declared {truth}, template computes {simulated})")));
        }
        Ok(Cell { name: name.to_string(), template, truth: truth.to_string() })
    }

    pub fn arity(&self) -> usize {
        self.template.num_pis()
    }

    /// Truth table as an integer, row r at bit r.
    pub fn truth_bits(&self) -> u64 {
        self.truth.bytes().enumerate().fold(0, |acc, (r, c)| acc | (((c == b'1') as u64) << r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellLibrary {
    cells: BTreeMap<String, Cell>,
}

impl CellLibrary {
    pub fn new(cells: Vec<Cell>) -> Result<CellLibrary> {
        let mut map = BTreeMap::new();
        for cell in cells {
            if cell.arity() > 4 {
                return Err(Error::LibraryCorrupt(format!("{}: arity {} exceeds 4", cell.name, cell.arity())));
            }
            let name = cell.name.clone();
            if map.insert(name.clone(), cell).is_some() {
                return Err(Error::LibraryCorrupt(format!("{name}: duplicate cell name")));
            }
        }
        for required in REQUIRED_CELLS {
            if !map.contains_key(required) {
                return Err(Error::LibraryCorrupt(format!("{required}: required cell missing")));
            }
        }
        Ok(CellLibrary { cells: map })
    }

    /// The built-in seven-cell library.
    pub fn mini() -> CellLibrary {
        let cells = vec![
            Cell::new("AND2", template(2, |b, i| b.and(i[0], i[1])), "0001"),
            Cell::new(
                "AOI21",
                template(3, |b, i| {
                    let ab = b.and(i[0], i[1]);
                    let nab = b.not(ab);
                    let nc = b.not(i[2]);
                    b.and(nab, nc)
                }),
                "11100000",
            ),
            Cell::new("INV", template(1, |b, i| b.not(i[0])), "10"),
            Cell::new(
                "NAND2",
                template(2, |b, i| {
                    let m = b.and(i[0], i[1]);
                    b.not(m)
                }),
                "1110",
            ),
            Cell::new(
                "NOR2",
                template(2, |b, i| {
                    let na = b.not(i[0]);
                    let nb = b.not(i[1]);
                    b.and(na, nb)
                }),
                "1000",
            ),
            Cell::new("OR2", template(2, |b, i| b.or(i[0], i[1])), "0111"),
            Cell::new(
                "XOR2",
                template(2, |b, i| {
                    let na = b.not(i[0]);
                    let nb = b.not(i[1]);
                    let l = b.and(i[0], nb);
                    let r = b.and(na, i[1]);
                    b.or(l, r)
                }),
                "0110",
            ),
        ];
        CellLibrary::new(cells.into_iter().collect::<Result<Vec<_>>>().expect("built-in cells are consistent"))
            .expect("built-in library is complete")
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.cells.get(name)
    }

    /// Cells in name order.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn template(arity: usize, body: impl FnOnce(&mut AigBuilder, &[NodeId]) -> NodeId) -> Aig {
    let mut b = AigBuilder::new();
    let pins: Vec<_> = (0..arity).map(|_| b.pi()).collect();
    let out = body(&mut b, &pins);
    b.finish(out)
}
