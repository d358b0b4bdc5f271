//! Brute-force cross-checks: Gaussian states built in a truncated number
//! basis, and a grid search for Gaussian states or two-component mixtures
//! below the boundary.

pub mod fock;
pub mod scan;

pub use fock::{auto_dim, build_gaussian_state, build_gaussian_state_auto, pmf_of, TruncatedState};
pub use scan::{tightness_scan, ScanGrid, ScanReport, ScanTarget};
