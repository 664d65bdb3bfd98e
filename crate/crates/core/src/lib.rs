//! Simulation library for spin qubits dressed by a sinusoidally modulated,
//! always-on global drive.
//!
//! The crate covers the full pipeline around that control scheme: analytic
//! control envelopes and Hamiltonian assembly ([`model`]), exact-step unitary
//! propagation ([`numerics`]), Magnus/space-curve noise diagnostics and the
//! Bessel-root modulation optimum ([`geometry`]), calibrated single-qubit
//! gates with coefficient optimization ([`gates`]), quasi-static Gaussian
//! noise maps ([`noisemaps`]), exchange-based two-qubit gates plus
//! singlet-triplet initialisation/readout ramps ([`twoqubit`]) and the
//! scenario runner behind the CLI ([`scenario`]).
//!
//! Units: Hamiltonians are `H/h` in MHz, times in µs, so propagator phases
//! are `exp(-i 2π (H/h) t)`.

pub mod error;
pub mod geometry;
pub mod gates;
pub mod model;
pub mod noisemaps;
pub mod numerics;
pub mod scenario;
pub mod twoqubit;

pub use error::{Result, SimError};
