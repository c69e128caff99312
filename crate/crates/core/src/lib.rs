//! Exchange-coupled spin-5/2 triangle: spectrum, thermodynamics, thermal
//! entanglement, Dicke-state dynamics and sequential-measurement sensing.
//!
//! Energies are in Kelvin and fields in Tesla. Time is the dimensionless
//! `θ = t k_B / ħ` (per Kelvin), converted with [`units::theta_to_ps`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dicke;
pub mod entanglement;
pub mod error;
pub mod exec;
pub mod fit;
pub mod half;
pub mod operator;
pub mod sectors;
pub mod sensing;
pub mod spin;
pub mod thermo;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
pub use half::HalfInteger;
pub use operator::{diagonalize, eigenvalues, HermitianOperator, SpectralDecomposition, Unit};
pub use spin::{build_hamiltonian_local_x, build_hamiltonian_z, ModelParameters, SpinQuantum};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
