use super::poincare::{fit_weighted_poincare, uniform_poincare_constant};
use crate::error::{Error, Result};
use crate::graphs::ConductanceSchedule;
use serde::Serialize;

/// Laziness, ellipticity and comparability constants over a time grid, with
/// the `(t, x[, y])` witnesses that attain them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub alpha_l: f64,
    pub alpha_l_witness: (f64, usize),
    pub alpha_e: f64,
    pub alpha_e_witness: (f64, usize, usize),
    pub alpha_bar: f64,
    /// `sup_{t,x} pi_t(x) / pi_0(x)`.
    pub c0: f64,
    pub c0_witness: (f64, usize),
    pub c_p: Option<f64>,
    pub c_p_witness: Option<(f64, usize, f64)>,
    pub c_p_prime: Option<f64>,
    pub grid: Vec<f64>,
}

pub fn extract_constants(schedule: &ConductanceSchedule, grid: &[f64]) -> Result<ConstantsReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty time grid".into()));
    }
    let g = schedule.graph();
    let pi0 = schedule.vertex_conductance(0.0)?;
    let mut rep = ConstantsReport {
        alpha_l: f64::INFINITY,
        alpha_l_witness: (grid[0], 0),
        alpha_e: f64::INFINITY,
        alpha_e_witness: (grid[0], 0, 0),
        alpha_bar: 0.0,
        c0: 0.0,
        c0_witness: (grid[0], 0),
        c_p: None,
        c_p_witness: None,
        c_p_prime: None,
        grid: grid.to_vec(),
    };
    for &t in grid {
        let pi = schedule.vertex_conductance(t)?;
        for x in 0..g.vertex_count() {
            let lazy = g
                .edge_id(x, x)
                .map_or(0.0, |e| schedule.edge_weight(t, e) / pi[x]);
            if lazy < rep.alpha_l {
                rep.alpha_l = lazy;
                rep.alpha_l_witness = (t, x);
            }
            for &(y, e) in g.incident(x) {
                let k = schedule.edge_weight(t, e) / pi[x];
                if k < rep.alpha_e {
                    rep.alpha_e = k;
                    rep.alpha_e_witness = (t, x, y);
                }
            }
            let ratio = pi[x] / pi0[x];
            if ratio > rep.c0 {
                rep.c0 = ratio;
                rep.c0_witness = (t, x);
            }
        }
    }
    rep.alpha_bar = rep.alpha_l.min(rep.alpha_e);
    Ok(rep)
}

impl ConstantsReport {
    /// Adds the uniform Poincaré constant over the catalog and a fitted
    /// weighted constant from half-ball indicator functions.
    pub fn with_poincare(
        mut self,
        schedule: &ConductanceSchedule,
        centers: &[usize],
        radii: &[f64],
    ) -> Result<Self> {
        let best = uniform_poincare_constant(schedule, &self.grid, centers, radii)?;
        self.c_p = Some(best.constant);
        self.c_p_witness = Some((best.t, best.center, best.radius));
        let g = schedule.graph();
        let mut fitted: f64 = 0.0;
        for &t in &self.grid {
            for &z in centers {
                for &r in radii {
                    let family = half_ball_family(g, z, r);
                    fitted = fitted.max(fit_weighted_poincare(schedule, t, z, r, &family)?);
                }
            }
        }
        self.c_p_prime = Some(fitted);
        Ok(self)
    }
}

/// Nonnegative test functions vanishing on part of `B(z, r)`: indicators of
/// the complement of the half-ball on each side of `z`, and of its far shell.
pub fn half_ball_family(g: &crate::graphs::Graph, z: usize, r: f64) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let inner = g.ball(z, r).members;
    let mut family = Vec::new();
    let half = inner.len() / 2;
    for part in [&inner[..half], &inner[half..]] {
        let mut f = vec![1.0; n];
        for &x in part {
            f[x] = 0.0;
        }
        family.push(f);
    }
    let mut shell = vec![0.0; n];
    for x in 0..n {
        if g.distance(z, x) as f64 > r / 2.0 {
            shell[x] = 1.0;
        }
    }
    family.push(shell);
    family
}
