use crate::error::Result;
use crate::graphs::{ConductanceSchedule, TimeMode};
use crate::kernels::{kernel, one_step_kernel, propagate_measure, walk_mode};
use serde::Serialize;

/// Exactness tolerance for discrete schedules.
pub const DISCRETE_EXACTNESS_TOL: f64 = 1e-12;
/// Exactness tolerance for continuous schedules (ODE kernels).
pub const CONTINUOUS_EXACTNESS_TOL: f64 = 1e-7;

pub fn exactness_tolerance(schedule: &ConductanceSchedule) -> f64 {
    match schedule.time_mode() {
        TimeMode::Discrete => DISCRETE_EXACTNESS_TOL,
        TimeMode::Continuous => CONTINUOUS_EXACTNESS_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub tolerance: f64,
    /// `(s, u, t)` triples checked.
    pub triples: Vec<(f64, f64, f64)>,
    /// `max |K_{s,t} 1 - 1|`.
    pub stochasticity: f64,
    /// `max |pi_k(x) K_k(x,y) - pi_k(y) K_k(y,x)| / max pi_k` over one-step kernels.
    pub reversibility: f64,
    /// `max |K_{s,t} - K_{s,u} K_{u,t}|`.
    pub semigroup: f64,
    /// `max |pi_s K_{s,t} - mu_{s,u} K_{u,t}| / max pi_t`, kernel row sums
    /// against measure propagation.
    pub propagation: f64,
    pub pass: bool,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Triples `(0, T/2, T)` and `(T/4, T/2, 3T/4)`, floored to integers for
/// discrete schedules.
fn default_triples(schedule: &ConductanceSchedule) -> Vec<(f64, f64, f64)> {
    let h = schedule.horizon();
    let snap = |t: f64| match schedule.time_mode() {
        TimeMode::Discrete => t.floor(),
        TimeMode::Continuous => t,
    };
    vec![(0.0, snap(h / 2.0), h), (snap(h / 4.0), snap(h / 2.0), snap(3.0 * h / 4.0))]
}

/// Stochasticity, one-step reversibility, the semigroup law and agreement of
/// kernel-based and propagated evolving measures.
pub fn exactness_check(schedule: &ConductanceSchedule) -> Result<ExactnessReport> {
    let mode = walk_mode(schedule);
    let tolerance = exactness_tolerance(schedule);
    let triples = default_triples(schedule);
    let (mut stochasticity, mut semigroup, mut propagation): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &(s, u, t) in &triples {
        let k_st = kernel(schedule, s, t, mode)?;
        let k_su = kernel(schedule, s, u, mode)?;
        let k_ut = kernel(schedule, u, t, mode)?;
        stochasticity = stochasticity.max(k_st.stochasticity_defect());
        let composed = k_su.then(&k_ut);
        semigroup = semigroup.max(k_st.dense().max_abs_diff(&composed.dense()));
        let pi_s = schedule.vertex_conductance(s)?;
        let scale = schedule.vertex_conductance(t)?.iter().copied().fold(0.0, f64::max);
        let direct = k_st.push_forward(&pi_s);
        let mu_su = propagate_measure(schedule, &pi_s, s, u, mode)?;
        let routed = propagate_measure(schedule, &mu_su, u, t, mode)?;
        propagation = propagation.max(max_diff(&direct, &routed) / scale);
    }
    let mut reversibility: f64 = 0.0;
    let times: Vec<f64> = match schedule.time_mode() {
        TimeMode::Discrete => (1..=schedule.horizon() as usize).map(|k| k as f64).collect(),
        TimeMode::Continuous => schedule.grid(),
    };
    for t in times {
        let k = one_step_kernel::<f64>(schedule, t)?;
        let scale = k.source_measure().iter().copied().fold(0.0, f64::max);
        reversibility = reversibility.max(k.reversibility_defect() / scale);
    }
    Ok(ExactnessReport {
        tolerance,
        triples,
        stochasticity,
        reversibility,
        semigroup,
        propagation,
        pass: stochasticity <= tolerance && reversibility <= tolerance && semigroup <= tolerance && propagation <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneMuReport {
    pub t: usize,
    pub slack: f64,
    /// Entries with `mu_{s',t} > mu_{s,t}` for some `s' < s`, or `mu_{s,t} > pi_t`.
    pub violations: usize,
    /// Largest `mu_{s,t}(y) / pi_t(y) - 1` seen.
    pub max_excess: f64,
    /// `max |mu_{s,t} / pi_t - 1|`; zero up to rounding for static schedules.
    pub max_deviation: f64,
}

/// `mu_{s',t} <= mu_{s,t} <= pi_t` for integer `s' <= s <= t`, relative slack
/// `slack` in units of `pi_t(y)`.
pub fn monotone_mu_check(schedule: &ConductanceSchedule, t: usize, slack: f64) -> Result<MonotoneMuReport> {
    let mode = walk_mode(schedule);
    let pi_t = schedule.vertex_conductance(t as f64)?;
    let mut rep = MonotoneMuReport { t, slack, violations: 0, max_excess: f64::NEG_INFINITY, max_deviation: 0.0 };
    let mut prev: Option<Vec<f64>> = None;
    for s in 0..=t {
        let pi_s = schedule.vertex_conductance(s as f64)?;
        let mu = propagate_measure(schedule, &pi_s, s as f64, t as f64, mode)?;
        for y in 0..mu.len() {
            let r = mu[y] / pi_t[y];
            rep.max_excess = rep.max_excess.max(r - 1.0);
            rep.max_deviation = rep.max_deviation.max((r - 1.0).abs());
            if r > 1.0 + slack {
                rep.violations += 1;
            }
            if let Some(p) = &prev {
                if p[y] > mu[y] + slack * pi_t[y] {
                    rep.violations += 1;
                }
            }
        }
        prev = Some(mu);
    }
    Ok(rep)
}
