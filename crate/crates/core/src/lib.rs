//! Fault-tolerant qubit routing for 2-D grid layouts.
//!
//! Protocols written as gate lists over named qubits are compiled into
//! nearest-neighbour circuits. SWAPs between qubits that hold live state are
//! budgeted by the code distance, data qubits can be moved back to where they
//! started, and barriers split the output into partitions.

pub mod dag;
pub mod emit;
pub mod error;
pub mod ir;
pub mod layout;
pub mod mapper;
pub mod testing;
pub mod verify;
pub mod workflow;

pub use dag::{Dag, Direction, FrontLayer};
pub use emit::{Circuit, CircuitAnalysis};
pub use error::*;
pub use ir::{parse_protocol, Destination, GateKind, Instruction, Protocol, Role};
pub use layout::{DistanceMatrix, ExtensionDirection, QubitLayout};
pub use mapper::{run_sabre, Constraints, SynthesisConfig};
pub use verify::{validate, Expectations, ValidationReport};
