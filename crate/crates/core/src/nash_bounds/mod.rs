//! `F` and `F^{-1}`, the psi-recursion, and on-diagonal upper-bound checks.

mod calculus;
mod diagonal;
mod examples;

pub use calculus::{big_f, f_inverse, psi_recursion, psi_uniform, PsiSolution, INVERSE_TOLERANCE, INVERSE_WINDOW, QUADRATURE_TOLERANCE};
pub use diagonal::{
    a_n_certificate, certified_nash, certified_nash_sequence, diff_eq_check, on_diagonal_sup, poisson_expectation,
    psi_tables, regularity_samples, step_max, verify_diag_bound_csrw, verify_diag_bound_dtrw, AnReport,
    DiagonalBoundReport, DiagonalEntry, DiffEqEntry, DiffEqReport, BOUND_SLACK, POISSON_TAIL,
};
pub use examples::{
    certified_kappa, dhmp_bound_check, gamma_condition, nonlocal_bound_check, DhmpReport, NonlocalEntry,
    NonlocalReport,
};
