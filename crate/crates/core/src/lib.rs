//! Exact simulation of a Bell-nonlocality protocol for bosonic atoms in an
//! optical lattice.
//!
//! The crate evolves Fock states of `N` atoms in `N` wells through the
//! protocol (preparation, cross-site splitting, phase imprint, on-site
//! splitting, parity readout), assembles the two-body Bell operator built
//! from one- and two-body parity correlators, and optimizes the measurement
//! phases.
//!
//! Sign and phase conventions are collected in `docs/CONVENTIONS.md`.

pub mod bell;
pub mod cli;
pub mod error;
pub mod fock;
pub mod optimize;
pub mod protocol;

pub use error::{Error, Result};
