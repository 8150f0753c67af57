//! Symbol detection for OTFS links whose receiver samples through a coarse
//! B-bit ADC.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the delay-Doppler channel `H0`, the Doppler-axis DFT
//!   `F_N ⊗ I_M` and the effective operator `H = H0 (F_N^H ⊗ I_M)` seen by
//!   the quantizer.
//! * [`constellation`] maps Gray-labelled bits to unit-energy symbols.
//! * [`quant`] holds the uniform quantizer, its interval likelihood and the
//!   output-side posterior moments.
//! * [`structured`] inverts the quasi-banded matrix
//!   `Psi = H0^H H0 / v1 + I / v0` in `O(l_max^2 MN + l_max^3)`.
//! * [`detect`] contains GEC-SR (fast and dense), GAMP and LMMSE.
//! * [`sim`] is the Monte Carlo harness behind the `otfs-sim` binary.
//! * [`oracles`] collects brute-force references used by tests and by
//!   `otfs-sim validate`.

pub mod constellation;
pub mod detect;
mod error;
pub mod model;
pub mod oracles;
pub mod quant;
pub mod sim;
mod special;
pub mod structured;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
