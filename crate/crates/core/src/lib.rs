//! Spin-generalized Holstein model for spin-dependent electron transfer.
//!
//! Two radical electrons hop between a donor (site 1) and an acceptor
//! (site 2) dressed by a polaron displacement of the relative vibration,
//! while each electron spin feels the external field and an isotropic
//! hyperfine coupling to one nuclear spin. The crate computes first-order
//! reaction probabilities, golden-rule rates and singlet-triplet
//! interconversion, and checks them against exact diagonalization of the
//! truncated model.
//!
//! Module map:
//!
//! - [`units`], [`params`], [`basis`]: constants, validated parameters and
//!   the composite basis.
//! - [`fermion`]: second-quantized operators on the two-electron sector.
//! - [`spin`]: site and 24-state spin eigensystems, prepared singlet/triplet
//!   states and the inclination rotation.
//! - [`vibronic`]: displacement matrices, unperturbed energies and the
//!   polaron-dressed tunneling matrix elements.
//! - [`perturbation`]: reaction probabilities, rates and conversion
//!   probabilities.
//! - [`oracle`]: exact evolution of the truncated Hamiltonian.
//! - [`tables`]: entry-by-entry reconciliation of the published tables.
//! - [`sweep`]: grid sweeps with deterministic CSV/JSON output.

// index loops mirror the physics indices; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod fermion;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod perturbation;
pub mod spin;
pub mod sweep;
pub mod tables;
pub mod units;
pub mod vibronic;

pub use error::{Error, Result};
pub use params::{validate_params, ModelParams, PhononCutoff};
