//! Hybrid-style pipeline for many-fermion response functions and bound-state
//! spectra: second-quantized Hamiltonians on occupation bitstrings, Chebyshev
//! moments of the rescaled Hamiltonian (by classical recursion or a matrix
//! walk-operator emulation with optional shot noise), Lorentz integrals
//! assembled from the moments, and extraction protocols for spectra, bound
//! amplitudes, and continuum response.

pub mod angmom;
pub mod blockenc;
pub mod cli;
pub mod chebyshev;
pub mod error;
pub mod fci;
pub mod fixture;
pub mod fockbasis;
pub mod hamiltonian;
pub mod lorentz;
pub mod nnls;
pub mod protocols;
pub mod quadrature;

pub use error::{LitError, Result};
