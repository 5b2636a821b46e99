//! Functional subgraph matching over logic circuits.
//!
//! And-Inverter Graphs and mapped netlists, plus everything needed to turn
//! them into labeled datasets and to score predictions against those.
//!
//! Every generative routine is a pure function of its inputs and a 64-bit
//! seed, so regenerated datasets are byte-identical.

pub mod aig;
pub mod dataset;
pub mod error;
pub mod iso;
pub mod library;
pub mod metrics;
pub mod pm;
pub mod properties;
pub mod random;
pub mod records;
pub mod rng;
pub mod sample;
pub mod sim;
pub mod synth;
pub mod techmap;
pub mod text;

pub use aig::{Aig, AigBuilder, Gate, NodeId, NodeKind, Violation};
pub use error::{Error, Result};
pub use library::CellLibrary;
pub use pm::{PmCell, PmNetlist, Signal};
