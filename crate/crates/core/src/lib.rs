//! Quantum kinetic Ising models.
//!
//! Classical Glauber dynamics of a periodic Ising chain, its quantum
//! (Lindblad) counterpart decomposed into τ sectors, the sector Hamiltonians
//! H_τ and their special points, and an imaginary-time MPS solver for long
//! open chains.

pub mod classical;
pub mod cli;
pub mod error;
pub mod hamiltonians;
pub mod io;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod pool;
pub mod quantum;
pub mod rates;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{Boundary, ModelParams, SpinConfig, TauSector};
