use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::graphs::{ConductanceSchedule, TimeMode};
use crate::kernels::{one_step_kernel, propagate_measure, WalkMode};
use serde::Serialize;

/// Largest log-log slope of `a_{2t+1} - a_t` in `t` accepted as bounded.
pub const GROWTH_EXPONENT_CAP: f64 = 0.1;
/// Entrywise tolerance for kernels of a rescaled schedule.
pub const RESCALED_KERNEL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEntry {
    pub s: usize,
    pub t: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbativeBudget {
    /// `a_t`, `t = 0..=horizon`.
    pub a: Vec<f64>,
    /// `rho_pi(r, r + 1)`, `r = 0..horizon`.
    pub steps: Vec<f64>,
    /// `sup_t (a_{2t+1} - a_t)` over `2t + 1 <= horizon`.
    pub big_a: f64,
    pub big_a_witness: usize,
    /// `rho_pi(s, t)` for grid pairs `s < t`.
    pub rho_table: Vec<RhoEntry>,
    /// Grid triples `s < s' < s''` checked for subadditivity.
    pub triples_checked: usize,
    pub subadditivity_violations: usize,
    /// Slope of `log(a_{2t+1} - a_t)` against `log t` on `[T/8, T/2]`.
    pub growth_exponent: f64,
    pub cond_pert: bool,
}

/// `rho_pi(s, t) = sup_x |log pi_t(x) / pi_s(x)|`, ignoring truncation
/// boundary vertices, whose missing edges are an artifact of the window.
fn rho_between(schedule: &ConductanceSchedule, s: usize, t: usize) -> Result<f64> {
    let a = schedule.vertex_conductance(s as f64)?;
    let b = schedule.vertex_conductance(t as f64)?;
    let boundary = schedule.graph().truncation_boundary();
    Ok((0..a.len())
        .filter(|x| !boundary.contains(x))
        .map(|x| (b[x] / a[x]).ln().abs())
        .fold(0.0, f64::max))
}

fn require_discrete(schedule: &ConductanceSchedule) -> Result<usize> {
    if schedule.time_mode() != TimeMode::Discrete {
        return Err(Error::InvalidConfig("the perturbative budget needs a discrete schedule".into()));
    }
    Ok(schedule.horizon() as usize)
}

/// Budget `a_t` on the integer grid. The finest partition attains the sup, so
/// `a_t` is the sum of one-step ratios; `grid` picks the times for the
/// `rho` table and the subadditivity spot checks.
pub fn compute_a_t(schedule: &ConductanceSchedule, grid: &[usize]) -> Result<PerturbativeBudget> {
    let horizon = require_discrete(schedule)?;
    let mut pis = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        pis.push(schedule.vertex_conductance(t as f64)?);
    }
    let boundary = schedule.graph().truncation_boundary();
    let steps: Vec<f64> = pis
        .windows(2)
        .map(|w| {
            (0..w[0].len())
                .filter(|x| !boundary.contains(x))
                .map(|x| (w[1][x] / w[0][x]).ln().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut a = vec![0.0];
    for r in &steps {
        a.push(a.last().unwrap() + r);
    }
    let (mut big_a, mut big_a_witness) = (0.0, 0);
    for t in 0..=horizon {
        if 2 * t + 1 > horizon {
            break;
        }
        let inc = a[2 * t + 1] - a[t];
        if inc > big_a {
            big_a = inc;
            big_a_witness = t;
        }
    }

    let mut grid: Vec<usize> = grid.iter().copied().filter(|&t| t <= horizon).collect();
    grid.sort_unstable();
    grid.dedup();
    let mut rho_table = Vec::new();
    let mut rho = std::collections::BTreeMap::new();
    for (i, &s) in grid.iter().enumerate() {
        for &t in &grid[i + 1..] {
            let v = rho_between(schedule, s, t)?;
            rho.insert((s, t), v);
            rho_table.push(RhoEntry { s, t, rho: v });
        }
    }
    let (mut triples_checked, mut subadditivity_violations) = (0, 0);
    for (i, &s) in grid.iter().enumerate() {
        for (j, &m) in grid.iter().enumerate().skip(i + 1) {
            for &t in &grid[j + 1..] {
                triples_checked += 1;
                if rho[&(s, t)] > (rho[&(s, m)] + rho[&(m, t)]) * (1.0 + 1e-12) + 1e-15 {
                    subadditivity_violations += 1;
                }
            }
        }
    }

    let lo = (horizon / 8).max(1);
    let hi = horizon / 2;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in lo..=hi {
        if 2 * t + 1 <= horizon {
            let inc = a[2 * t + 1] - a[t];
            if inc > 0.0 {
                xs.push(t as f64);
                ys.push(inc);
            }
        }
    }
    // Identically zero increments are the static case: no growth at all.
    let growth_exponent = if xs.len() >= 2 { log_log_slope(&xs, &ys) } else { 0.0 };
    Ok(PerturbativeBudget {
        a,
        steps,
        big_a,
        big_a_witness,
        rho_table,
        triples_checked,
        subadditivity_violations,
        growth_exponent,
        cond_pert: growth_exponent <= GROWTH_EXPONENT_CAP,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledReport {
    pub anchor: usize,
    /// `a_u - a_v`, `u = 0..=horizon`.
    pub log_shift: Vec<f64>,
    /// Largest entrywise difference of the one-step kernels.
    pub kernel_defect: f64,
    pub kernels_invariant: bool,
}

/// `pi_hat_{u;v} = e^{a_u - a_v} pi_u`. Errors with `MonotonizationFailed`
/// unless every `u -> pi_hat_{u;v}(x)` is nondecreasing.
pub fn rescaled_schedule(
    schedule: &ConductanceSchedule,
    budget: &PerturbativeBudget,
    anchor: usize,
) -> Result<(ConductanceSchedule, RescaledReport)> {
    let horizon = require_discrete(schedule)?;
    if budget.a.len() != horizon + 1 {
        return Err(Error::InvalidConfig("budget does not match the schedule horizon".into()));
    }
    if anchor > horizon {
        return Err(Error::TimeOutOfRange { t: anchor as f64, horizon: horizon as f64 });
    }
    let log_shift: Vec<f64> = budget.a.iter().map(|&a| a - budget.a[anchor]).collect();
    let hat = ConductanceSchedule::rescaled(schedule, log_shift.clone())?;
    let boundary = schedule.graph().truncation_boundary();
    let mut prev = hat.vertex_conductance(0.0)?;
    for u in 1..=horizon {
        let cur = hat.vertex_conductance(u as f64)?;
        for x in (0..cur.len()).filter(|x| !boundary.contains(x)) {
            if cur[x] < prev[x] * (1.0 - 1e-14) {
                return Err(Error::MonotonizationFailed { vertex: x, u0: u - 1, u1: u });
            }
        }
        prev = cur;
    }
    let mut kernel_defect: f64 = 0.0;
    for u in 1..=horizon {
        let a = one_step_kernel::<f64>(schedule, u as f64)?;
        let b = one_step_kernel::<f64>(&hat, u as f64)?;
        kernel_defect = kernel_defect.max(a.dense().max_abs_diff(&b.dense()));
    }
    let report = RescaledReport {
        anchor,
        log_shift,
        kernel_defect,
        kernels_invariant: kernel_defect <= RESCALED_KERNEL_TOL,
    };
    Ok((hat, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuLowerBoundReport {
    pub s: usize,
    pub t: usize,
    pub gamma: f64,
    pub big_a: f64,
    /// `min_y mu_{s,t}(y) / pi_t(y)`.
    pub min_ratio: f64,
    pub argmin: usize,
    /// `e^{-gamma A}`.
    pub bound: f64,
    /// `e^{-(a_t - a_s)}`, the sharper intermediate bound.
    pub budget_bound: f64,
    pub pass: bool,
}

/// `mu_{s,t}(y) >= e^{-gamma A} pi_t(y)` for `(t + 1) <= 2^gamma (s + 1)`.
pub fn mu_lower_bound_check(
    schedule: &ConductanceSchedule,
    budget: &PerturbativeBudget,
    gamma: f64,
    s: usize,
    t: usize,
) -> Result<MuLowerBoundReport> {
    require_discrete(schedule)?;
    if s > t {
        return Err(Error::TimeOutOfRange { t: s as f64, horizon: t as f64 });
    }
    if (t + 1) as f64 > 2f64.powf(gamma) * (s + 1) as f64 {
        return Err(Error::InvalidConfig(format!("(t+1) <= 2^gamma (s+1) fails for s={s}, t={t}, gamma={gamma}")));
    }
    let pi_s = schedule.vertex_conductance(s as f64)?;
    let pi_t = schedule.vertex_conductance(t as f64)?;
    let mu = propagate_measure(schedule, &pi_s, s as f64, t as f64, WalkMode::Dtrw)?;
    let boundary = schedule.graph().truncation_boundary();
    let (mut min_ratio, mut argmin) = (f64::INFINITY, 0);
    for y in (0..mu.len()).filter(|y| !boundary.contains(y)) {
        let r = mu[y] / pi_t[y];
        if r < min_ratio {
            min_ratio = r;
            argmin = y;
        }
    }
    let bound = (-gamma * budget.big_a).exp();
    Ok(MuLowerBoundReport {
        s,
        t,
        gamma,
        big_a: budget.big_a,
        min_ratio,
        argmin,
        bound,
        budget_bound: (-(budget.a[t] - budget.a[s])).exp(),
        pass: min_ratio >= bound * (1.0 - 1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuSweepReport {
    pub gamma: f64,
    pub big_a: f64,
    /// Pairs `s < t` with `(t + 1) <= 2^gamma (s + 1)`.
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `min_y mu_{s,t}(y) / pi_t(y)` over the pairs, with its `(s, t)`.
    pub min_ratio: f64,
    pub witness: (usize, usize),
    pub bound: f64,
}

/// `mu_{s,t} >= e^{-gamma A} pi_t` on every admissible pair up to the horizon.
pub fn mu_lower_bound_sweep(
    schedule: &ConductanceSchedule,
    budget: &PerturbativeBudget,
    gamma: f64,
) -> Result<MuSweepReport> {
    let horizon = require_discrete(schedule)?;
    let bound = (-gamma * budget.big_a).exp();
    let boundary = schedule.graph().truncation_boundary();
    let limit = 2f64.powf(gamma);
    let mut rep = MuSweepReport {
        gamma,
        big_a: budget.big_a,
        pairs: 0,
        violations: 0,
        min_ratio: f64::INFINITY,
        witness: (0, 0),
        bound,
    };
    for s in 0..horizon {
        let mut mu = schedule.vertex_conductance(s as f64)?;
        for t in (s + 1)..=horizon {
            if (t + 1) as f64 > limit * (s + 1) as f64 {
                break;
            }
            mu = propagate_measure(schedule, &mu, (t - 1) as f64, t as f64, WalkMode::Dtrw)?;
            let pi_t = schedule.vertex_conductance(t as f64)?;
            let r = (0..mu.len())
                .filter(|y| !boundary.contains(y))
                .map(|y| mu[y] / pi_t[y])
                .fold(f64::INFINITY, f64::min);
            rep.pairs += 1;
            if r < bound * (1.0 - 1e-12) {
                rep.violations += 1;
            }
            if r < rep.min_ratio {
                rep.min_ratio = r;
                rep.witness = (s, t);
            }
        }
    }
    Ok(rep)
}
