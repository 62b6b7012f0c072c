//! Extraction protocols: cascading-M_J spectral prescan, bound-state
//! amplitude fitting, continuum inversion, and the round-trip check.

pub mod inversion;
pub mod prescan;

pub use inversion::{
    invert_continuum, reconstruct_li, InversionParams, ResponseFunction,
};
pub use prescan::{
    fit_bound_amplitudes, neutron_threshold, prescan, vertex_error_estimate, BoundState, PeakFit,
    PrescanParams, SpectrumResult,
};
