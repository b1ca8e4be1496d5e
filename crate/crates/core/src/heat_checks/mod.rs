//! Heat-equation solutions on time-space cylinders and numerical checks of
//! Harnack, Hölder, growth, mean-value, Gaffney and Gaussian bounds.

mod cylinder;
mod ghke;
mod lemmas;
mod phi;

pub use cylinder::{
    solve_cylinder, solve_cylinder_family, Cylinder, CylinderSolution, Lateral, CONTINUOUS_RESIDUAL_TOL,
    CYLINDER_GRID_STEP, DISCRETE_RESIDUAL_TOL, POSITIVITY_TOL,
};
pub use phi::{
    holder_check, holder_cylinder, phi_estimate, phi_family, phi_quotient, solution_family, HolderReport,
    OscillationEntry, PhiParams, PhiReport, PhiWitness, POSITIVITY_GUARD, RANDOM_MEMBERS,
};
pub use lemmas::{
    csrw_envelope, d_doubling_check, d_moment_bound, d_trace, dtrw_c1, gaffney_check, growth_lemma_estimate,
    max_principle_monotone_e, ml2_check, ml2_cylinder, rate_function, rho_t, zeta, DDoublingReport, GaffneyEntry,
    GaffneyReport, GrowthLemmaReport, Ml2Report, MomentEntry, MonotoneEReport, SecondGrowthEntry, ETA_BRACKET,
    TRACE_GRID_STEP,
};
pub use ghke::{ghke_fit, GaussianFit, GaussianRecord, GhkeMode, DENSE_FIT_LIMIT, UNDERFLOW_FLOOR};
