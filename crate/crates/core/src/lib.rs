//! Single-photon site percolation on honeycomb waveguide lattices.
//!
//! The crate covers the full simulation pipeline: random lattice
//! generation, tight-binding Hamiltonian assembly with
//! distance-decaying nearest and next-nearest couplings, wavepacket
//! propagation, localization observables, the classical flow model,
//! and Monte Carlo ensembles over occupation probability.
//!
//! Everything numeric is generic over the scalar type through
//! [`Scalar`]; the aliases below fix the common concrete choices.
//!
//! Units: waveguide pitch and coupling reference distances are in
//! micrometers, coupling strengths in 1/mm, propagation distance z in
//! mm. Classical flow time is in lattice steps.

pub mod classical;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
pub mod propagator;
pub mod rng;
pub mod scalar;
pub mod unionfind;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Lattice geometry with f64 coordinates.
pub type Lattice64 = lattice::Lattice<f64>;
/// Lattice geometry with f32 coordinates.
pub type Lattice32 = lattice::Lattice<f32>;
/// Double precision coupling matrix.
pub type Hamiltonian64 = hamiltonian::Hamiltonian<f64>;
/// Single precision coupling matrix.
pub type Hamiltonian32 = hamiltonian::Hamiltonian<f32>;
/// Double precision sweep configuration.
pub type SweepConfig64 = ensemble::SweepConfig<f64>;
