//! Orchestrated runs: the perturbative budget, the oscillating counterexample
//! and drift chains, and config-driven experiments with report emission.

mod budget;
mod counterexample;
mod invariants;
mod run;

pub use budget::{
    compute_a_t, mu_lower_bound_check, mu_lower_bound_sweep, rescaled_schedule, MuLowerBoundReport, MuSweepReport, PerturbativeBudget, RescaledReport,
    RhoEntry, GROWTH_EXPONENT_CAP, RESCALED_KERNEL_TOL,
};
pub use counterexample::{
    counterexample_suite, drift_suite, CounterexampleParams, CounterexampleReport, DriftReport, LawEntry,
    MonteCarloCheck, BUDGET_SPREAD_CAP, ENVELOPE_GROWTH_FLAG, PAIR_TARGET, PAIR_TOL, SPEED_TOL,
};
pub use invariants::{
    exactness_check, exactness_tolerance, monotone_mu_check, ExactnessReport, MonotoneMuReport,
    CONTINUOUS_EXACTNESS_TOL, DISCRETE_EXACTNESS_TOL,
};
pub use run::{
    run_experiment, write_atomic, BoundReport, BoundsParams, CheckOutcome, CounterexampleConfig, DriftParams,
    ExperimentConfig, ExperimentKind, PerturbativeParams, RunMeta, StageError,
};
