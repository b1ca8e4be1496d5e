//! Spectral and conductance isoperimetric profiles and Nash-profile bounds.

mod curve;
mod nash;
mod spectral;
mod subsets;

pub use curve::{NashFunction, PowerPiece, ProfileCurve, ProfileKind};
pub use nash::{
    nash_from_volume, nash_profile_bounds, regularity_check, NashSandwich, RegularityCheck, VolumeNash,
    NASH_SAMPLES,
};
pub use spectral::{
    boundary_flux, conductance_profile, conductance_steps, dirichlet_eigenpair, dirichlet_eigenvalue, spectral_profile, ProfileMode,
    Profiles,
};
pub use subsets::{connected_subsets, SetArena, EXACT_SUBSET_CAP, MASK_LIMIT};
