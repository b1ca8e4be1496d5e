use crate::error::{out_of_range, Error, Result};
use crate::graphs::{ConductanceSchedule, Graph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Nondecreasing volume function with `v(0) = v(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolumeFunction {
    /// `v(r) = max(1, r)^degree`.
    Power { degree: f64 },
    /// Right-continuous step function through `(radii[k], values[k])`;
    /// `1` below the first radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

impl VolumeFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            VolumeFunction::Power { degree } => r.max(1.0).powf(*degree),
            VolumeFunction::Table { radii, values } => {
                let k = radii.partition_point(|&q| q <= r);
                if k == 0 || r <= 1.0 {
                    1.0
                } else {
                    values[k - 1].max(1.0)
                }
            }
        }
    }

    /// `v^{-1}(s) = inf { r >= 1 : v(r) >= s }`, `+inf` if never reached.
    pub fn inverse(&self, s: f64) -> f64 {
        match self {
            VolumeFunction::Power { degree } => s.max(1.0).powf(1.0 / degree).max(1.0),
            VolumeFunction::Table { radii, values } => {
                if s <= 1.0 {
                    return 1.0;
                }
                radii
                    .iter()
                    .zip(values)
                    .find(|&(&r, &v)| r >= 1.0 && v >= s)
                    .map_or(f64::INFINITY, |(&r, _)| r.max(1.0))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VolumeFunction::Power { degree } => {
                if !(*degree > 0.0) {
                    return Err(out_of_range("volume degree", *degree, "(0, inf)"));
                }
            }
            VolumeFunction::Table { radii, values } => {
                if radii.len() != values.len() || radii.is_empty() {
                    return Err(Error::InvalidConfig("volume table needs matching radii/values".into()));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) || values.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidConfig("volume table must be increasing".into()));
                }
            }
        }
        Ok(())
    }
}

/// `pi(B(x, r))`.
pub fn ball_volume(graph: &Graph, pi: &[f64], x: usize, r: f64) -> f64 {
    (0..graph.vertex_count())
        .filter(|&z| graph.distance(x, z) as f64 <= r)
        .map(|z| pi[z])
        .sum()
}

/// Centers whose `radius`-ball stays clear of the truncation boundary.
pub fn admissible_centers(graph: &Graph, radius: f64) -> Vec<usize> {
    (0..graph.vertex_count())
        .filter(|&x| !graph.is_truncated() || (graph.boundary_distance(x) as f64) > radius)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub c_d: f64,
    /// `(t, x, r)` attaining `c_d`.
    pub witness: (f64, usize, f64),
    pub radii: Vec<f64>,
    pub grid: Vec<f64>,
}

fn check_radii(graph: &Graph, radii: &[f64]) -> Result<()> {
    let diam = graph.diameter() as f64;
    for &r in radii {
        if !(r >= 1.0) {
            return Err(out_of_range("radius", r, "[1, inf)"));
        }
        if 2.0 * r > diam && graph.vertex_count() > 1 {
            return Err(Error::RadiusExceedsGuard {
                radius: r,
                reason: format!("2r exceeds the diameter {diam}"),
            });
        }
    }
    Ok(())
}

/// `sup pi_t(B(x, 2r)) / pi_t(B(x, r))` over grid times, admissible centers
/// and the given radii.
pub fn volume_doubling_constant(
    schedule: &ConductanceSchedule,
    grid: &[f64],
    radii: &[f64],
) -> Result<DoublingReport> {
    let g = schedule.graph();
    let mut report = DoublingReport {
        c_d: 1.0,
        witness: (grid.first().copied().unwrap_or(0.0), 0, radii.first().copied().unwrap_or(1.0)),
        radii: radii.to_vec(),
        grid: grid.to_vec(),
    };
    if g.vertex_count() == 1 {
        return Ok(report);
    }
    check_radii(g, radii)?;
    let per_time: Vec<Result<(f64, (f64, usize, f64))>> = grid
        .par_iter()
        .map(|&t| {
            let pi = schedule.vertex_conductance(t)?;
            let mut best = (1.0, (t, 0, radii[0]));
            for &r in radii {
                for x in admissible_centers(g, 2.0 * r) {
                    let q = ball_volume(g, &pi, x, 2.0 * r) / ball_volume(g, &pi, x, r);
                    if q > best.0 {
                        best = (q, (t, x, r));
                    }
                }
            }
            Ok(best)
        })
        .collect();
    for item in per_time {
        let (q, w) = item?;
        if q > report.c_d {
            report.c_d = q;
            report.witness = w;
        }
    }
    Ok(report)
}

/// Volume growth profile with its comparability and doubling constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub v: VolumeFunction,
    /// Smallest `C_v` with `C_v^{-1} <= pi_t(B(x,r)) / v(r) <= C_v` and
    /// `v(2r) <= C_v v(r)` on the samples.
    pub c_v: f64,
    pub c_d: f64,
    pub witness: (f64, usize, f64),
}

impl GrowthProfile {
    pub fn eval(&self, r: f64) -> f64 {
        self.v.eval(r)
    }
}

/// Fit `C_v` and `C_D` for a declared `v` over grid times, admissible centers
/// and radii (radius 0 is always included).
pub fn fit_growth_profile(
    schedule: &ConductanceSchedule,
    grid: &[f64],
    radii: &[f64],
    v: VolumeFunction,
) -> Result<GrowthProfile> {
    v.validate()?;
    let g = schedule.graph();
    let doubling = volume_doubling_constant(schedule, grid, radii)?;
    let mut c_v: f64 = 1.0;
    let mut witness = (0.0, 0, 0.0);
    let mut all_r = vec![0.0];
    all_r.extend_from_slice(radii);
    for &r in radii {
        c_v = c_v.max(v.eval(2.0 * r) / v.eval(r));
    }
    for &t in grid {
        let pi = schedule.vertex_conductance(t)?;
        for &r in &all_r {
            let vr = v.eval(r);
            for x in admissible_centers(g, r) {
                let q = ball_volume(g, &pi, x, r) / vr;
                let worst = q.max(1.0 / q);
                if worst > c_v {
                    c_v = worst;
                    witness = (t, x, r);
                }
            }
        }
    }
    Ok(GrowthProfile {
        v,
        c_v,
        c_d: doubling.c_d,
        witness,
    })
}
