//! Stabilizer tensor networks: a quantum state is stored as a stabilizer
//! tableau plus a matrix product state over the tableau's stabilizer basis.

mod bits;
mod error;
mod pauli;
mod tableau;

pub mod circuit;
pub mod decomposition;
pub mod engine;

pub mod mps;
pub mod oracle;
pub mod verify;

pub use bits::{BasisIndex, Bits};
pub use error::{Error, Result};
pub use pauli::{g, Pauli, PauliString};
pub use tableau::{random_clifford, random_clifford_gates, CliffordGenerator, Tableau};
