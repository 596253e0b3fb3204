//! Quantized perturbed cat maps on the torus `T^{2d}`.
//!
//! The crate covers the full chain from exact integer data to numerical
//! statistics: symplectic matrices and invariant lattices ([`lattice`]),
//! Weyl quantization on `L²((Z/NZ)^d)` ([`quantum`]), propagators
//! ([`propagator`]), classical flows and time averages ([`classical`]),
//! eigenstates in invariant subspaces and their Wigner statistics
//! ([`scarring`]) and Egorov residuals ([`egorov`]).

pub mod classical;
pub mod egorov;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod presets;
pub mod propagator;
pub mod quantum;
pub mod scarring;
pub mod trig;

pub use error::{Error, Result};
