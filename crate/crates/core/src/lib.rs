//! Exact diagonalization of interacting hardcore bosons on an open sawtooth
//! ladder.
//!
//! The ladder is flattened onto a chain of `L` sites numbered `1..=L`. Odd
//! sites form the A (base) leg, even sites the B (apex) leg. Nearest-neighbor
//! bonds `(i, i + 1)` carry the hopping `J` and the interaction `V`; A sites are
//! additionally linked by `J'` along `(i, i + 2)` for odd `i`.
//!
//! The crate covers the whole pipeline used to study domain-wall quenches at
//! half filling:
//!
//! - [`basis`]: fixed-particle-number Fock bases, combinadic ranking and the
//!   particle-hole sectors.
//! - [`hamiltonian`]: sparse many-body operators, the single-particle matrix and
//!   its compact localized states.
//! - [`evolve`]: full diagonalization, return probability, ensembles and a
//!   Krylov propagator for sectors beyond the dense limit.
//! - [`localization`]: the perturbative localized eigenstate and its fidelity.
//! - [`spectral_stats`]: unfolding, spacing histograms, the `alpha` indicator,
//!   Brody fits and the gap-ratio statistic.
//! - [`entanglement`]: reduced density matrices and von Neumann entropy.

pub mod basis;
pub mod entanglement;
mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod localization;
mod numeric;
pub mod spectral_stats;

pub use error::{Error, Result};
