//! Transition kernels, evolving measures, sampling and weighted norms.

mod csrw;
mod io;
mod kernel;
mod measure;
mod norms;
mod walk;

pub use csrw::{
    csrw_kernel, integrate_backward, integrate_forward_row, OdeOptions, MAX_ODE_STEP, ODE_TOLERANCE,
    RENORMALIZE_LIMIT,
};
pub use io::{fmt_real, read_kernel_csv, write_kernel_csv, write_measure_csv};
pub use kernel::{
    backward_family, compose_discrete, one_step_kernel, pull_back_discrete, push_forward_discrete, Kernel,
    KernelMatrix, WalkMode, DENSE_LIMIT,
};
pub(crate) use kernel::step_csr;
pub use measure::{c_stability_probe, evolving_measure, propagate_measure, EvolvingMeasure, StabilityProbe};
pub(crate) use measure::integer_time;
pub use norms::{
    adjoint, dirichlet_form, dual_kernel, l1_norm, l2_norm_sq, perturbed_kernel, weighted_norm, Exponent,
    WeightField, WEIGHT_OVERFLOW_GUARD,
};
pub use walk::{path_rng, sample_paths, sample_trajectory, PathSample, Trajectory};

/// Kernel for `mode` over `[s, t]`: discrete composition or the CSRW ODE.
pub fn kernel(
    schedule: &crate::graphs::ConductanceSchedule,
    s: f64,
    t: f64,
    mode: WalkMode,
) -> crate::Result<Kernel<f64>> {
    match mode {
        WalkMode::Dtrw => compose_discrete(schedule, integer_time(s)?, integer_time(t)?),
        WalkMode::Csrw => csrw_kernel(schedule, s, t, MAX_ODE_STEP),
    }
}

/// The walk a schedule's time mode describes.
pub fn walk_mode(schedule: &crate::graphs::ConductanceSchedule) -> WalkMode {
    match schedule.time_mode() {
        crate::graphs::TimeMode::Discrete => WalkMode::Dtrw,
        crate::graphs::TimeMode::Continuous => WalkMode::Csrw,
    }
}
