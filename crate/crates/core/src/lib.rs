//! Quantum non-Gaussianity (QNG) witnesses built from photon-number moments.
//!
//! No mixture of single-mode Gaussian states can have a photon-number
//! variance below a curve parameterized by a squeezing parameter `r`.
//! This crate evaluates that curve and its equivalent forms (second moment,
//! integrated intensity, `g2`, Fano factor, homodyne quadrature moments),
//! classifies measured moments against it, corrects measured moments for
//! loss, additive noise, vacuum admixture and phase-insensitive
//! amplification, and computes the QNG depth of lossy state families.
//!
//! The [`oracle`] module holds an independent truncated Fock-basis
//! construction of Gaussian states used to cross-check the analytic
//! formulas and to scan for counterexamples to the boundary.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. All floating-point special functions go through `libm`, so
//! results are bit-identical between the two configurations.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod roots;

pub mod depth;
pub mod measurement;
pub mod oracle;
pub mod prob_witness;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
pub use witness::{
    classify_moments, ng_boundary, ng_inverse_mean, BoundaryPoint, MomentPair, Verdict,
    VerdictTag,
};
