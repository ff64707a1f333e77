//! Desk-scale laboratory for quantum state certification with restricted
//! unentangled measurements.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: complex matrices, vectorization, Schatten norms, Hermitian
//!   eigendecomposition.
//! - [`states`]: density matrices, POVMs, Born-rule sampling, the copy oracle,
//!   Pauli observables and mutually unbiased bases.
//! - [`haar`]: Haar-random unitaries and Monte Carlo checks of Haar moments.
//! - [`mic`]: the measurement information channel, its norms and eigenbasis,
//!   and order-level lower-bound certificates.
//! - [`hard_instances`]: binary perturbations of the maximally mixed state.
//! - [`chi_square`]: exact enumeration of joint outcome laws and divergences.
//! - [`classical`]: classical l2 testers, vote amplification and the
//!   l-bit simulation protocol.
//! - [`certifiers`]: the five end-to-end certification algorithms.
//! - [`experiment`]: seeded Monte Carlo success estimation and sweeps.
//! - [`stats`]: moment accumulators, Wilson intervals, multinomial draws.
//! - [`suites`]: invariant suites shared by the CLI `verify` command and the
//!   acceptance tests.

#![forbid(unsafe_code)]

pub mod certifiers;
pub mod chi_square;
pub mod classical;
mod error;
pub mod experiment;
pub mod hard_instances;
pub mod haar;
pub mod linalg;
pub mod mic;
pub mod states;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
