//! Critical-set geometry of the kinematic landscape `J(U) = Tr(U ρ U† O)` on
//! the unitary group U(N).
//!
//! Everything here is pure computation over `alloc`; file formats, the CLI
//! and thread-level parallelism live in the `critgeom` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod combinatorics;
pub mod curvature;
mod error;
pub mod landscape;
pub mod linalg;
mod math;
pub mod montecarlo;
pub mod volumes;

pub use error::{Error, Result};
