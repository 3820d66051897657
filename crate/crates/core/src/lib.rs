//! Variational Monte Carlo for interacting lattice bosons.
//!
//! The crate finds and analyzes ground states of the Bose-Hubbard model on
//! periodic lattices with a neural backflow-Jastrow wavefunction optimized by
//! stochastic reconfiguration. Small systems are checked against an exact
//! diagonalization oracle.

pub mod ansatz;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod estimators;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
pub mod optimizer;
pub mod oracle;
pub mod sampler;
pub mod stats;
pub mod wavefunction;

pub use error::{Error, Result};
