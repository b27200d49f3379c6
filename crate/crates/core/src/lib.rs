//! Quantum rotor thermal machines under a local GKLS master equation.
//!
//! The crate builds chiral clock-model Hamiltonians for chains of rotors,
//! assembles the local dissipative generator, solves for steady states and
//! evaluates heat, probability and entropy currents. On top of that sit the
//! machine studies (dimer motor, trimer refrigerator, switch, rectifier) and a
//! differential-evolution optimizer.

pub mod clock;
pub mod devol;
pub mod lindblad;
pub mod machines;
pub mod error;
pub mod qops;
pub mod thermo;

pub use error::{Error, Result};
