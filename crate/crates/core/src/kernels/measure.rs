use super::csrw::{integrate_forward_row, OdeOptions};
use super::kernel::{push_forward_discrete, WalkMode};
use crate::error::{out_of_range, Error, Result};
use crate::graphs::ConductanceSchedule;
use serde::Serialize;

/// `mu_{s,t} = pi_s K_{s,t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolvingMeasure {
    pub values: Vec<f64>,
    pub s: f64,
    pub t: f64,
}

impl EvolvingMeasure {
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub(crate) fn integer_time(t: f64) -> Result<usize> {
    if t < 0.0 || t.fract() != 0.0 {
        return Err(out_of_range("discrete time", t, "non-negative integers"));
    }
    Ok(t as usize)
}

/// `mu K_{s,t}` for either walk.
pub fn propagate_measure(
    schedule: &ConductanceSchedule,
    mu: &[f64],
    s: f64,
    t: f64,
    mode: WalkMode,
) -> Result<Vec<f64>> {
    match mode {
        WalkMode::Dtrw => push_forward_discrete(schedule, mu, integer_time(s)?, integer_time(t)?),
        WalkMode::Csrw => integrate_forward_row(schedule, s, t, mu, &OdeOptions::default()),
    }
}

pub fn evolving_measure(schedule: &ConductanceSchedule, s: f64, t: f64, mode: WalkMode) -> Result<EvolvingMeasure> {
    let pi_s = schedule.vertex_conductance(s)?;
    let values = propagate_measure(schedule, &pi_s, s, t, mode)?;
    Ok(EvolvingMeasure { values, s, t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityProbe {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `(s, t, y)` attaining the minimum.
    pub argmin: (f64, f64, usize),
    pub argmax: (f64, f64, usize),
}

/// Extremes of `mu_{s,t}(y) / reference(y)` over grid pairs `s <= t`.
/// Report only; no stability claim is made.
pub fn c_stability_probe(
    schedule: &ConductanceSchedule,
    reference: &[f64],
    grid: &[f64],
    mode: WalkMode,
) -> Result<StabilityProbe> {
    if reference.len() != schedule.vertex_count() {
        return Err(Error::InvalidConfig("reference length != vertex count".into()));
    }
    if let Some(y) = reference.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::DegenerateMeasure { vertex: y });
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut probe = StabilityProbe {
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        argmin: (0.0, 0.0, 0),
        argmax: (0.0, 0.0, 0),
    };
    for (i, &s) in grid.iter().enumerate() {
        let mut mu = schedule.vertex_conductance(s)?;
        let mut now = s;
        for &t in &grid[i..] {
            mu = propagate_measure(schedule, &mu, now, t, mode)?;
            now = t;
            for (y, (&m, &r)) in mu.iter().zip(reference).enumerate() {
                let q = m / r;
                if q < probe.min_ratio {
                    probe.min_ratio = q;
                    probe.argmin = (s, t, y);
                }
                if q > probe.max_ratio {
                    probe.max_ratio = q;
                    probe.argmax = (s, t, y);
                }
            }
        }
    }
    Ok(probe)
}
