//! Volume growth, doubling, Poincaré constants and laziness/ellipticity.

mod constants;
mod poincare;
mod volume;

pub use constants::{extract_constants, half_ball_family, ConstantsReport};
pub use poincare::{
    cutoff, fit_weighted_poincare, poincare_constant, uniform_poincare_constant, weighted_poincare_check,
    PoincareResult, WeightedPoincareCheck, DENSE_PENCIL_LIMIT,
};
pub use volume::{
    admissible_centers, ball_volume, fit_growth_profile, volume_doubling_constant, DoublingReport,
    GrowthProfile, VolumeFunction,
};
