use super::cylinder::{solve_cylinder_family, Cylinder, CylinderSolution, Lateral};
use crate::error::{out_of_range, Error, Result};
use crate::graphs::{ConductanceSchedule, Graph, TimeMode};
use crate::kernels::path_rng;
use rand::Rng;
use serde::Serialize;

/// Regularization `u -> u + b` keeping Harnack quotients finite.
pub const POSITIVITY_GUARD: f64 = 1e-300;
/// Random nonnegative terminal data added to the delta family.
pub const RANDOM_MEMBERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiParams {
    pub theta: [f64; 4],
    pub random_members: usize,
    pub seed: u64,
}

impl Default for PhiParams {
    /// `(1/sqrt 2, 1/sqrt 2, sqrt 3/2, 1) / 2`.
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { theta: [h / 2.0, h / 2.0, 3f64.sqrt() / 4.0, 0.5], random_members: RANDOM_MEMBERS, seed: 0 }
    }
}

impl PhiParams {
    fn validate(&self) -> Result<()> {
        let t = self.theta;
        if !(t[0] > 0.0 && t[0] <= t[1] && t[1] <= t[2] && t[2] < t[3]) {
            return Err(Error::InvalidConfig(format!("theta must satisfy 0 < t1 <= t2 <= t3 < t4, got {t:?}")));
        }
        Ok(())
    }
}

/// `(member, tau1, x1, tau2, x2)` attaining the quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiWitness {
    pub member: usize,
    pub tau1: f64,
    pub x1: usize,
    pub tau2: f64,
    pub x2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub z: usize,
    pub radius: f64,
    pub big_t: f64,
    pub theta: [f64; 4],
    pub gamma_hat: f64,
    pub witness: Option<PhiWitness>,
    pub members: usize,
    /// Harnack inequalities are only claimed for the CSRW.
    pub exploratory: bool,
}

/// Admissible lags `tau` in `(lo^2, hi^2]`; a degenerate interval is the single
/// lag `lo^2` (rounded in discrete time).
fn lags(times: &[f64], big_t: f64, lo: f64, hi: f64, mode: TimeMode) -> Vec<f64> {
    if lo == hi {
        let tau = match mode {
            TimeMode::Discrete => (lo * lo).round().max(1.0),
            TimeMode::Continuous => lo * lo,
        };
        return vec![tau];
    }
    times
        .iter()
        .map(|&s| big_t - s)
        .filter(|&tau| tau > lo * lo + 1e-9 && tau <= hi * hi + 1e-9)
        .collect()
}

/// `min u(T - tau2, x2) / u(T - tau1, x1)` over the admissible grid of the
/// given solutions, with `x_i` in `B(z, R)`. Discrete time also requires
/// `tau2 >= tau1 + d(x1, x2)` and `tau2 > tau1`, since rounding can merge the
/// two lag windows at small `R`.
pub fn phi_quotient(
    g: &Graph,
    solutions: &[CylinderSolution],
    z: usize,
    radius: f64,
    big_t: f64,
    theta: [f64; 4],
) -> (f64, Option<PhiWitness>) {
    let ball = g.ball(z, radius).members;
    let mut best = (f64::INFINITY, None);
    for (m, sol) in solutions.iter().enumerate() {
        let l1 = lags(&sol.times, big_t, theta[0] * radius, theta[1] * radius, sol.mode);
        let l2 = lags(&sol.times, big_t, theta[2] * radius, theta[3] * radius, sol.mode);
        let val = |tau: f64, x: usize| sol.at(big_t - tau).map(|v| v[x] + POSITIVITY_GUARD);
        match sol.mode {
            TimeMode::Continuous => {
                let mut top = (f64::NEG_INFINITY, 0.0, 0);
                for &t1 in &l1 {
                    for &x in &ball {
                        if let Some(v) = val(t1, x) {
                            if v > top.0 {
                                top = (v, t1, x);
                            }
                        }
                    }
                }
                let mut low = (f64::INFINITY, 0.0, 0);
                for &t2 in &l2 {
                    for &x in &ball {
                        if let Some(v) = val(t2, x) {
                            if v < low.0 {
                                low = (v, t2, x);
                            }
                        }
                    }
                }
                let q = low.0 / top.0;
                if q < best.0 {
                    best = (q, Some(PhiWitness { member: m, tau1: top.1, x1: top.2, tau2: low.1, x2: low.2 }));
                }
            }
            TimeMode::Discrete => {
                for &t1 in &l1 {
                    for &x1 in &ball {
                        let Some(v1) = val(t1, x1) else { continue };
                        for &t2 in &l2 {
                            for &x2 in &ball {
                                if t2 <= t1 || t2 < t1 + g.distance(x1, x2) as f64 {
                                    continue;
                                }
                                let Some(v2) = val(t2, x2) else { continue };
                                let q = v2 / v1;
                                if q < best.0 {
                                    best = (q, Some(PhiWitness { member: m, tau1: t1, x1, tau2: t2, x2 }));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

/// Delta data on every vertex of `B(z, r)` plus `random` seeded uniform data
/// supported on the same ball.
pub fn solution_family(g: &Graph, z: usize, r: f64, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let ball = g.ball(z, r).members;
    let mut out: Vec<Vec<f64>> = ball
        .iter()
        .map(|&y| {
            let mut f = vec![0.0; n];
            f[y] = 1.0;
            f
        })
        .collect();
    for i in 0..random {
        let mut rng = path_rng(seed, i as u64);
        let mut f = vec![0.0; n];
        for &y in &ball {
            f[y] = rng.random::<f64>();
        }
        out.push(f);
    }
    out
}

/// Solutions of the PHI family on `Q(T - (theta_4 R)^2, T; z, 8R)`.
pub fn phi_family(
    schedule: &ConductanceSchedule,
    z: usize,
    radius: f64,
    big_t: f64,
    params: &PhiParams,
) -> Result<Vec<CylinderSolution>> {
    params.validate()?;
    let span = (params.theta[3] * radius).powi(2);
    if big_t < span {
        return Err(out_of_range("T", big_t, &format!("[(theta_4 R)^2 = {span}, inf)")));
    }
    let t1 = match schedule.time_mode() {
        TimeMode::Discrete => big_t - span.floor(),
        TimeMode::Continuous => big_t - span,
    };
    let cyl = Cylinder::new(t1, big_t, z, 8.0 * radius)?;
    let family = solution_family(schedule.graph(), z, 8.0 * radius, params.random_members, params.seed);
    let extra = [big_t - (params.theta[0] * radius).powi(2), big_t - (params.theta[1] * radius).powi(2)];
    solve_cylinder_family(schedule, &cyl, &family, &Lateral::Zero, &extra)
}

pub fn phi_estimate(
    schedule: &ConductanceSchedule,
    z: usize,
    radius: f64,
    big_t: f64,
    params: &PhiParams,
) -> Result<PhiReport> {
    let sols = phi_family(schedule, z, radius, big_t, params)?;
    let (gamma_hat, witness) = phi_quotient(schedule.graph(), &sols, z, radius, big_t, params.theta);
    if witness.is_none() {
        return Err(out_of_range("R", radius, "radii with disjoint discrete lag windows"));
    }
    Ok(PhiReport {
        z,
        radius,
        big_t,
        theta: params.theta,
        gamma_hat,
        witness,
        members: sols.len(),
        exploratory: schedule.time_mode() == TimeMode::Discrete,
    })
}

/// `Q(T - 4R^2, T; z, 8R)`, the domain the Hölder check needs.
pub fn holder_cylinder(z: usize, radius: f64, big_t: f64) -> Result<Cylinder> {
    let span = 4.0 * radius * radius;
    if big_t < span {
        return Err(out_of_range("T", big_t, &format!("[4R^2 = {span}, inf)")));
    }
    Cylinder::new(big_t - span, big_t, z, 8.0 * radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationEntry {
    pub s1: f64,
    pub y1: usize,
    pub i: usize,
    /// `w(i-1)`, `w(i)`.
    pub inner: f64,
    pub outer: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub radius: f64,
    /// Largest `h` for which the Hölder bound holds on every scanned pair.
    pub h_est: f64,
    /// `log2(1 / (1 - gamma_hat))`, the exponent the oscillation argument gives.
    pub h_gamma: f64,
    pub violations: usize,
    pub pairs: usize,
    pub sup_q: f64,
    /// `((s1, y1), (s2, y2))` limiting `h_est`.
    pub witness: Option<((f64, usize), (f64, usize))>,
    pub oscillation: Vec<OscillationEntry>,
    pub oscillation_violations: usize,
}

impl HolderReport {
    pub fn consistent(&self) -> bool {
        self.h_est >= self.h_gamma * (1.0 - 1e-9)
    }
}

/// Largest scanned time count per window; longer grids are strided.
const HOLDER_TIMES: usize = 192;

/// Hölder exponent of `u` on `B(z, R)` with `T - s` in `[R^2, 4R^2]`, the
/// violations at `h = log2(1/(1 - gamma_hat))`, and the dyadic oscillation
/// decay `w(i-1) <= (1 - gamma_hat) w(i)` around anchors in `B(z, R)`.
pub fn holder_check(
    schedule: &ConductanceSchedule,
    z: usize,
    radius: f64,
    big_t: f64,
    solution: &CylinderSolution,
    gamma_hat: f64,
) -> Result<HolderReport> {
    let g = schedule.graph();
    let q = holder_cylinder(z, radius, big_t)?;
    let c = &solution.cylinder;
    if c.z != z || c.radius < q.radius || c.t1 > q.t1 + 1e-9 || c.t2 < big_t - 1e-9 {
        return Err(Error::InvalidConfig("solution does not cover Q(T - 4R^2, T; z, 8R)".into()));
    }
    let gamma = gamma_hat.clamp(0.0, 1.0);
    let h_gamma = if gamma >= 1.0 { f64::INFINITY } else { -(1.0 - gamma).log2() };
    let big_q: Vec<usize> = (0..solution.times.len())
        .filter(|&i| solution.times[i] >= q.t1 - 1e-9 && solution.times[i] <= big_t + 1e-9)
        .collect();
    let sup_q = big_q
        .iter()
        .flat_map(|&i| q.ball(g).into_iter().map(move |x| solution.values[i][x]))
        .fold(0.0, f64::max);
    let window: Vec<usize> = big_q
        .iter()
        .copied()
        .filter(|&i| {
            let lag = big_t - solution.times[i];
            lag >= radius * radius - 1e-9 && lag <= 4.0 * radius * radius + 1e-9
        })
        .collect();
    let stride = window.len().div_ceil(HOLDER_TIMES).max(1);
    let times: Vec<usize> = window.iter().copied().step_by(stride).collect();
    let ball = g.ball(z, radius).members;
    let points: Vec<(f64, usize, f64)> = times
        .iter()
        .flat_map(|&i| ball.iter().map(move |&y| (solution.times[i], y, solution.values[i][y])))
        .collect();
    let mut h_est = f64::INFINITY;
    let mut witness = None;
    let mut violations = 0;
    let mut pairs = 0;
    for (a, p) in points.iter().enumerate() {
        for b in points.iter().skip(a + 1) {
            pairs += 1;
            let r = (b.0 - p.0).abs().sqrt().max(g.distance(p.1, b.1) as f64);
            let scaled = 4.0 / radius * r;
            let diff = (b.2 - p.2).abs();
            if diff > scaled.powf(h_gamma) * sup_q * (1.0 + 1e-12) + 1e-300 {
                violations += 1;
            }
            if scaled < 1.0 && diff > 0.0 && sup_q > 0.0 {
                let h = (diff / sup_q).ln() / scaled.ln();
                if h < h_est {
                    h_est = h;
                    witness = Some(((p.0, p.1), (b.0, b.1)));
                }
            }
        }
    }
    let oscillation = oscillation_decay(g, solution, &q, radius, big_t, gamma);
    let oscillation_violations = oscillation.iter().filter(|e| !e.pass).count();
    Ok(HolderReport { radius, h_est, h_gamma, violations, pairs, sup_q, witness, oscillation, oscillation_violations })
}

fn oscillation_decay(
    g: &Graph,
    sol: &CylinderSolution,
    q: &Cylinder,
    radius: f64,
    big_t: f64,
    gamma: f64,
) -> Vec<OscillationEntry> {
    let r2 = radius * radius;
    let mut out = Vec::new();
    for lag in [4.0 * r2, 2.0 * r2, r2] {
        let s1 = big_t - lag;
        let Some(i0) = sol.index_of(s1).or_else(|| sol.times.iter().position(|&t| t >= s1)) else { continue };
        let s1 = sol.times[i0];
        for y1 in g.ball(q.z, radius).members {
            let mut w = Vec::new();
            for i in 0.. {
                let ri = 2f64.powi(i);
                if !q.contains(g, s1, s1 + ri * ri, y1, ri) || s1 + ri * ri > big_t + 1e-9 {
                    break;
                }
                let ball = g.ball(y1, ri).members;
                let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
                for (k, &t) in sol.times.iter().enumerate() {
                    if t < s1 - 1e-9 || t > s1 + ri * ri + 1e-9 {
                        continue;
                    }
                    for &x in &ball {
                        hi = hi.max(sol.values[k][x]);
                        lo = lo.min(sol.values[k][x]);
                    }
                }
                w.push(hi - lo);
            }
            for i in 1..w.len() {
                let pass = w[i - 1] <= (1.0 - gamma) * w[i] + 1e-12 * w[i].max(1e-300);
                out.push(OscillationEntry { s1, y1, i, inner: w[i - 1], outer: w[i], pass });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat_checks::solve_cylinder;
    use std::sync::Arc;

    fn cycle(n: usize, mode: TimeMode, horizon: f64) -> ConductanceSchedule {
        let g = Arc::new(Graph::cycle(n).unwrap().with_loops().unwrap());
        ConductanceSchedule::static_uniform(g, 1.0, 1.0, mode, horizon).unwrap()
    }

    #[test]
    fn constant_solution_has_unit_quotient() {
        let s = cycle(16, TimeMode::Continuous, 8.0);
        let cyl = Cylinder::new(0.0, 8.0, 0, 16.0).unwrap();
        let sol = solve_cylinder(&s, &cyl, &[1.0; 16], &Lateral::Constant(1.0)).unwrap();
        let (gamma, _) = phi_quotient(s.graph(), &[sol.clone()], 0, 2.0, 8.0, PhiParams::default().theta);
        assert!((gamma - 1.0).abs() < 1e-12);
        let h = holder_check(&s, 0, 1.0, 4.0, &sol, 0.5).unwrap();
        assert_eq!(h.violations, 0);
        assert!(h.h_est.is_infinite());
    }

    #[test]
    fn cycle_phi_positive() {
        let s = cycle(32, TimeMode::Continuous, 4.0);
        let p = PhiParams { random_members: 5, ..PhiParams::default() };
        let rep = phi_estimate(&s, 0, 2.0, 4.0, &p).unwrap();
        assert!(rep.gamma_hat > 0.0 && rep.gamma_hat < 1.0);
        assert!(!rep.exploratory);
    }
}
