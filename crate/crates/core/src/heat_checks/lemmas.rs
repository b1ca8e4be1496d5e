use super::cylinder::{backward_trace, solve_cylinder_family, time_grid, Cylinder, CylinderSolution, Lateral};
use super::phi::{solution_family, PhiParams};
use crate::error::{out_of_range, Error, Result};
use crate::fit::linear_fit;
use crate::graphs::ConductanceSchedule;
use crate::kernels::{kernel, one_step_kernel, perturbed_kernel, walk_mode, Exponent, WeightField, WalkMode};
use crate::linalg::DenseMatrix;
use serde::Serialize;

/// Grid spacing of continuous-time traces over `[0, t]`.
pub const TRACE_GRID_STEP: f64 = 0.25;

/// `{(x, weight)}` of a cylinder window: `pi_s(x)` times the time weight.
fn window_weights(
    schedule: &ConductanceSchedule,
    sol: &CylinderSolution,
    a: f64,
    b: f64,
    ball: &[usize],
) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for (i, w) in sol.time_weights(a, b) {
        let pi = schedule.vertex_conductance(sol.times[i])?;
        for &x in ball {
            out.push((i, x, w * pi[x]));
        }
    }
    Ok(out)
}

/// Smallest level `u*` with `pi({u >= u*} in window) >= mass`; zero if the
/// window cannot carry that mass.
fn level_for_mass(sol: &CylinderSolution, pts: &[(usize, usize, f64)], mass: f64) -> f64 {
    let mut vals: Vec<(f64, f64)> = pts.iter().map(|&(i, x, w)| (sol.values[i][x], w)).collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = 0.0;
    for (v, w) in vals {
        acc += w;
        if acc >= mass * (1.0 - 1e-12) {
            return v.max(0.0);
        }
    }
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondGrowthEntry {
    pub r: usize,
    /// `pi(Q(T - r^2, T; z, r)) / pi(Q(T - R^2, T; z, R))`.
    pub volume_ratio: f64,
    /// Smallest `u(T - 4R^2, z)` over members scaled to the density hypothesis.
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthLemmaReport {
    pub delta: f64,
    pub epsilon_hat: f64,
    pub witness_member: usize,
    pub members: usize,
    pub members_meeting: usize,
    pub second: Vec<SecondGrowthEntry>,
    /// `min_value ~ c volume_ratio^theta`, fitted in log-log.
    pub theta_fit: Option<f64>,
    pub c_fit: Option<f64>,
}

/// Empirical first growth lemma: each member of the delta-plus-random family
/// on `Q(T - 4R^2, T; z, 2R)` is scaled so `{u >= 1}` fills a `delta` share of
/// `Q(T - R^2, T; z, R)`, and `epsilon_hat` is the least infimum over
/// `Q(T - 3R^2, T - 2R^2; z, R)`. The second lemma's ratio form is scanned
/// for `r <= R/2` with `T' = T`.
pub fn growth_lemma_estimate(
    schedule: &ConductanceSchedule,
    z: usize,
    radius: f64,
    big_t: f64,
    delta: f64,
    params: &PhiParams,
) -> Result<GrowthLemmaReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(out_of_range("delta", delta, "(0, 1]"));
    }
    let r2 = radius * radius;
    if big_t < 6.0 * r2 {
        return Err(out_of_range("T", big_t, &format!("[6R^2 = {}, inf)", 6.0 * r2)));
    }
    let g = schedule.graph();
    let cyl = Cylinder::new(big_t - 4.0 * r2, big_t, z, 2.0 * radius)?;
    let family = solution_family(g, z, 2.0 * radius, params.random_members, params.seed);
    let rs: Vec<usize> = (1..=(radius / 2.0).floor() as usize).collect();
    let mut extra = vec![big_t - r2, big_t - 2.0 * r2, big_t - 3.0 * r2];
    extra.extend(rs.iter().map(|&r| big_t - (r * r) as f64));
    let sols = solve_cylinder_family(schedule, &cyl, &family, &Lateral::Zero, &extra)?;
    let ball_r = g.ball(z, radius).members;
    let mut eps = (f64::INFINITY, 0);
    let mut meeting = 0;
    for (m, sol) in sols.iter().enumerate() {
        let pts = window_weights(schedule, sol, big_t - r2, big_t, &ball_r)?;
        let total: f64 = pts.iter().map(|p| p.2).sum();
        let level = level_for_mass(sol, &pts, delta * total);
        if level <= 0.0 {
            continue;
        }
        meeting += 1;
        let inf = sol
            .time_weights(big_t - 3.0 * r2, big_t - 2.0 * r2)
            .iter()
            .flat_map(|&(i, _)| ball_r.iter().map(move |&x| sol.values[i][x]))
            .fold(f64::INFINITY, f64::min);
        let e = inf / level;
        if e < eps.0 {
            eps = (e, m);
        }
    }
    if meeting == 0 {
        return Err(Error::EmptyFamily { delta });
    }
    let big_vol: f64 = window_weights(schedule, &sols[0], big_t - r2, big_t, &ball_r)?.iter().map(|p| p.2).sum();
    let mut second = Vec::new();
    for &r in &rs {
        let rr = (r * r) as f64;
        let small = g.ball(z, r as f64).members;
        let vol: f64 = window_weights(schedule, &sols[0], big_t - rr, big_t, &small)?.iter().map(|p| p.2).sum();
        let mut min_value = f64::INFINITY;
        for sol in &sols {
            let pts = window_weights(schedule, sol, big_t - rr, big_t, &ball_r)?;
            let level = level_for_mass(sol, &pts, delta * vol);
            if level <= 0.0 {
                continue;
            }
            if let Some(v) = sol.at(big_t - 4.0 * r2) {
                min_value = min_value.min(v[z] / level);
            }
        }
        if min_value.is_finite() {
            second.push(SecondGrowthEntry { r, volume_ratio: vol / big_vol, min_value });
        }
    }
    let usable: Vec<&SecondGrowthEntry> = second.iter().filter(|e| e.min_value > 0.0).collect();
    let (theta_fit, c_fit) = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|e| e.volume_ratio.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|e| e.min_value.ln()).collect();
        let (slope, icpt) = linear_fit(&x, &y);
        (Some(slope), Some(icpt.exp()))
    } else {
        (None, None)
    };
    Ok(GrowthLemmaReport {
        delta,
        epsilon_hat: eps.0,
        witness_member: eps.1,
        members: sols.len(),
        members_meeting: meeting,
        second,
        theta_fit,
        c_fit,
    })
}

/// `Q(T - 2t, T; z, R)` with the grid time `T - t` the check reads.
pub fn ml2_cylinder(z: usize, radius: f64, big_t: f64, t: f64) -> Result<(Cylinder, [f64; 1])> {
    Ok((Cylinder::new(big_t - 2.0 * t, big_t, z, radius)?, [big_t - t]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ml2Report {
    pub t: f64,
    pub radius: f64,
    /// `u^2(T - t, z)`.
    pub lhs: f64,
    /// `int_Q u^2 dpi`.
    pub integral: f64,
    /// `pi(Q)`.
    pub volume: f64,
    /// `vartheta(t / R^2)` with `vartheta(s) = max(s, s^{-1/nu})`.
    pub vartheta: f64,
    /// `vartheta / pi(Q) * int_Q u^2 dpi`.
    pub rhs_unit: f64,
    /// Smallest `C` with `lhs <= C rhs_unit`.
    pub c_fitted: f64,
    pub subsolution_excess: f64,
}

/// `L^2` mean value inequality for a sub-solution given on
/// `Q(T - 2t, T; z, R)` (see [`ml2_cylinder`]).
pub fn ml2_check(
    schedule: &ConductanceSchedule,
    z: usize,
    radius: f64,
    big_t: f64,
    t: f64,
    nu: f64,
    sub: &CylinderSolution,
) -> Result<Ml2Report> {
    if !(t >= 2.0 && big_t >= 2.0 * t) {
        return Err(out_of_range("t", t, &format!("[2, T/2 = {}]", big_t / 2.0)));
    }
    if !(radius > 1.0) {
        return Err(out_of_range("R", radius, "(1, inf)"));
    }
    if !(nu > 0.0) {
        return Err(out_of_range("nu", nu, "(0, inf)"));
    }
    let c = &sub.cylinder;
    if c.z != z || c.radius < radius || c.t1 > big_t - 2.0 * t + 1e-9 || c.t2 < big_t - 1e-9 {
        return Err(Error::InvalidConfig("sub-solution does not cover Q(T - 2t, T; z, R)".into()));
    }
    let subsolution_excess = sub.verify_subsolution(schedule)?;
    let at = sub
        .at(big_t - t)
        .ok_or_else(|| Error::InvalidConfig(format!("time T - t = {} is not on the solution grid", big_t - t)))?;
    let lhs = at[z] * at[z];
    let ball = schedule.graph().ball(z, radius).members;
    let pts = window_weights(schedule, sub, big_t - 2.0 * t, big_t, &ball)?;
    let volume: f64 = pts.iter().map(|p| p.2).sum();
    let integral: f64 = pts.iter().map(|&(i, x, w)| w * sub.values[i][x].powi(2)).sum();
    let s = t / (radius * radius);
    let vartheta = s.max(s.powf(-1.0 / nu));
    let rhs_unit = vartheta / volume * integral;
    let c_fitted = if lhs == 0.0 { 0.0 } else { lhs / rhs_unit };
    Ok(Ml2Report { t, radius, lhs, integral, volume, vartheta, rhs_unit, c_fitted, subsolution_excess })
}

/// `zeta(theta) = (e^{2 r0 L |theta|} - 1)^2 / (8 alpha)`.
pub fn zeta(theta: f64, alpha: f64, r0: f64, lipschitz: f64) -> f64 {
    (2.0 * r0 * lipschitz * theta.abs()).exp_m1().powi(2) / (8.0 * alpha)
}

/// `log(1 + 2 zeta(theta))` without overflow for large `theta`.
fn log1p_two_zeta(theta: f64, alpha: f64, r0: f64, lipschitz: f64) -> f64 {
    let x = 2.0 * r0 * lipschitz * theta.abs();
    let ln_expm1 = if x > 20.0 { x + (-(-x).exp()).ln_1p() } else { x.exp_m1().ln() };
    let lz = 2.0 * ln_expm1 - (4.0 * alpha).ln();
    if lz > 30.0 {
        lz + (-lz).exp().ln_1p()
    } else {
        lz.exp().ln_1p()
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (a.abs() + b.abs()).max(1e-300) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

/// `sup_theta f(theta)` over `theta > 0`: a log grid, then golden section
/// around the best grid point.
fn sup_log_grid(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const POINTS: usize = 400;
    let ratio = (hi / lo).powf(1.0 / (POINTS - 1) as f64);
    let grid: Vec<f64> = (0..POINTS).map(|i| lo * ratio.powi(i as i32)).collect();
    let (k, best) = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, f(x)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(POINTS - 1)];
    best.max(golden_max(f, a, b, 1e-8))
}

/// `c1 = (1/2) sup_theta theta^{-2} log(1 + 2 zeta(theta))`.
pub fn dtrw_c1(alpha: f64, r0: f64, lipschitz: f64) -> f64 {
    let f = |th: f64| log1p_two_zeta(th, alpha, r0, lipschitz) / (th * th);
    0.5 * sup_log_grid(&f, 1e-4, 1e3)
}

/// Smallest `c` with `theta^2 / c <= zeta(theta) <= c theta^2` on `(0, delta_star]`.
pub fn csrw_envelope(delta_star: f64, r0: f64, lipschitz: f64) -> f64 {
    let up = |th: f64| zeta(th, 1.0, r0, lipschitz) / (th * th);
    let down = |th: f64| th * th / zeta(th, 1.0, r0, lipschitz);
    sup_log_grid(&up, 1e-6, delta_star).max(sup_log_grid(&down, 1e-6, delta_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaffneyEntry {
    pub theta: f64,
    pub measured: f64,
    pub chi: f64,
    pub bound: f64,
    pub pass: bool,
    /// `c1^{-1} theta^2 <= chi(theta) <= c1 theta^2`, or `None` past `delta_star`.
    pub envelope: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaffneyReport {
    pub s: f64,
    pub t: f64,
    pub mode: WalkMode,
    pub alpha: f64,
    pub r0: f64,
    pub lipschitz: f64,
    pub c1: f64,
    pub delta_star: f64,
    pub entries: Vec<GaffneyEntry>,
    pub pass: bool,
}

/// `||K^theta_{s,t}||_{L^2(pi_t) -> L^2(pi_s)} <= exp(chi(theta)(t - s))` with
/// `K^theta = w_{-theta} K w_theta`, `w_theta = e^{theta rho}`.
pub fn gaffney_check(
    schedule: &ConductanceSchedule,
    s: f64,
    t: f64,
    thetas: &[f64],
    rho: &WeightField,
) -> Result<GaffneyReport> {
    schedule.verify_monotone()?;
    let g = schedule.graph();
    let mode = walk_mode(schedule);
    let k = kernel(schedule, s, t, mode)?;
    let r0 = g.edges().iter().map(|&(a, b)| g.distance(a, b)).max().unwrap_or(1).max(1) as f64;
    let l = rho.lipschitz;
    let (alpha, c1, delta_star) = match mode {
        WalkMode::Dtrw => {
            let mut alpha = f64::INFINITY;
            for step in (s as usize + 1)..=(t as usize) {
                alpha = alpha.min(one_step_kernel::<f64>(schedule, step as f64)?.min_diagonal());
            }
            if !(alpha > 0.0) || alpha.is_infinite() {
                return Err(out_of_range("laziness alpha", alpha, "(0, 1]"));
            }
            (alpha, dtrw_c1(alpha, r0, l), f64::INFINITY)
        }
        WalkMode::Csrw => (1.0, csrw_envelope(1.0, r0, l), 1.0),
    };
    let mut entries = Vec::with_capacity(thetas.len());
    for &th in thetas {
        let kt = perturbed_kernel(&k, &rho.with_theta(th))?;
        let measured = kt.norm(Exponent::Two, Exponent::Two)?;
        let chi = match mode {
            WalkMode::Dtrw => c1 * th * th,
            WalkMode::Csrw => zeta(th, 1.0, r0, l),
        };
        let bound = (chi * (t - s)).exp();
        let envelope = (th.abs() <= delta_star && th != 0.0).then(|| {
            let q = th * th;
            chi >= q / c1 * (1.0 - 1e-9) && chi <= c1 * q * (1.0 + 1e-9)
        });
        entries.push(GaffneyEntry { theta: th, measured, chi, bound, pass: measured <= bound * (1.0 + 1e-12), envelope });
    }
    let pass = entries.iter().all(|e| e.pass && e.envelope != Some(false));
    Ok(GaffneyReport { s, t, mode, alpha, r0, lipschitz: l, c1, delta_star, entries, pass })
}

/// Rate function `I`: `r^2` on `[0, 1]`; above 1, `r (log r + 1)` for the
/// CSRW and `r^2` for the DTRW.
pub fn rate_function(r: f64, mode: WalkMode) -> f64 {
    if r <= 1.0 {
        return r * r;
    }
    match mode {
        WalkMode::Csrw => r * (r.ln() + 1.0),
        WalkMode::Dtrw => r * r,
    }
}

/// Backward solution of `init` (columns) on the grid of `[0, t]` with `extra`
/// times included.
fn trace_to(
    schedule: &ConductanceSchedule,
    t: f64,
    init: DenseMatrix<f64>,
    extra: &[f64],
) -> Result<(Vec<f64>, Vec<DenseMatrix<f64>>)> {
    let (grid, _) = time_grid(schedule, 0.0, t, extra, TRACE_GRID_STEP)?;
    let tr = backward_trace(schedule, &grid, init, None)?;
    Ok((grid, tr))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneEReport {
    pub eta: f64,
    /// `(s, E_s(u))`.
    pub trace: Vec<(f64, f64)>,
    pub monotone: bool,
    /// First `s` where `E` decreases.
    pub witness: Option<f64>,
    /// Largest `eta` keeping the trace nondecreasing, by bisection on `[0, 1e3]`.
    pub eta_max: f64,
    /// False when `eta = 1e3` is still monotone, so `eta_max` is only a lower bound.
    pub bracket_valid: bool,
}

/// Upper end of the bisection for the largest monotone `eta`.
pub const ETA_BRACKET: f64 = 1e3;

/// `E_s(u) = sum_x f_s(x) u_s(x)^2 pi_s(x)` with
/// `f_s = exp(-eta (s + 1) I(rho / (s + 1)))` and `u_s = K_{s,t} u_t`.
pub fn max_principle_monotone_e(
    schedule: &ConductanceSchedule,
    t: f64,
    rho: &[f64],
    terminal: &[f64],
    eta: f64,
) -> Result<MonotoneEReport> {
    let n = schedule.vertex_count();
    if rho.len() != n || terminal.len() != n {
        return Err(Error::InvalidConfig("rho and terminal data need one value per vertex".into()));
    }
    if let Some(x) = rho.iter().position(|&r| !(r >= 1.0)) {
        return Err(out_of_range(&format!("rho({x})"), rho[x], "[1, inf)"));
    }
    if !(eta >= 0.0) {
        return Err(out_of_range("eta", eta, "[0, inf)"));
    }
    let mode = walk_mode(schedule);
    let init = DenseMatrix::from_row_major(n, 1, terminal.to_vec());
    let (grid, tr) = trace_to(schedule, t, init, &[])?;
    let pis: Vec<Vec<f64>> = grid.iter().map(|&s| schedule.vertex_conductance(s)).collect::<Result<_>>()?;
    let energy = |eta: f64| -> Vec<(f64, f64)> {
        grid.iter()
            .enumerate()
            .map(|(i, &s)| {
                let e = (0..n)
                    .map(|x| {
                        let f = (-eta * (s + 1.0) * rate_function(rho[x] / (s + 1.0), mode)).exp();
                        f * tr[i][(x, 0)].powi(2) * pis[i][x]
                    })
                    .sum();
                (s, e)
            })
            .collect()
    };
    let first_drop = |tr: &[(f64, f64)]| {
        tr.windows(2)
            .find(|w| w[1].1 < w[0].1 * (1.0 - 1e-12) - f64::MIN_POSITIVE)
            .map(|w| w[0].0)
    };
    let trace = energy(eta);
    let witness = first_drop(&trace);
    let bracket_valid = first_drop(&energy(ETA_BRACKET)).is_some();
    let eta_max = if !bracket_valid {
        ETA_BRACKET
    } else if first_drop(&energy(0.0)).is_some() {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, ETA_BRACKET);
        while hi - lo > 1e-6 * hi.max(1e-6) {
            let mid = 0.5 * (lo + hi);
            if first_drop(&energy(mid)).is_none() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(MonotoneEReport { eta, trace, monotone: witness.is_none(), witness, eta_max, bracket_valid })
}

/// `D_{s,t}(y) = sum_x pi_s(x) K_{s,t}(x, y)^2` on the grid of `[0, t]`.
pub fn d_trace(schedule: &ConductanceSchedule, y: usize, t: f64, extra: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = schedule.vertex_count();
    let mut init = DenseMatrix::zeros(n, 1);
    init[(y, 0)] = 1.0;
    let (grid, tr) = trace_to(schedule, t, init, extra)?;
    grid.iter()
        .zip(&tr)
        .map(|(&s, col)| {
            let pi = schedule.vertex_conductance(s)?;
            Ok((s, (0..n).map(|x| pi[x] * col[(x, 0)].powi(2)).sum()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DDoublingReport {
    pub y: usize,
    pub t: f64,
    pub trace: Vec<(f64, f64)>,
    pub monotone: bool,
    pub monotone_witness: Option<f64>,
    /// Smallest `C1` with `C1 D_{t-2l,t}(y) >= D_{t-l,t}(y)` over the lags.
    pub c1: f64,
    pub c1_lag: Option<f64>,
}

fn lookup(trace: &[(f64, f64)], s: f64) -> Option<f64> {
    trace.iter().find(|p| (p.0 - s).abs() < 1e-9).map(|p| p.1)
}

pub fn d_doubling_check(schedule: &ConductanceSchedule, y: usize, t: f64, lags: &[f64]) -> Result<DDoublingReport> {
    let mut extra = Vec::new();
    for &l in lags {
        if !(l > 0.0 && 2.0 * l <= t) {
            return Err(out_of_range("lag", l, &format!("(0, t/2 = {}]", t / 2.0)));
        }
        extra.extend([t - l, t - 2.0 * l]);
    }
    let trace = d_trace(schedule, y, t, &extra)?;
    let monotone_witness = trace
        .windows(2)
        .find(|w| w[1].1 < w[0].1 * (1.0 - 1e-12))
        .map(|w| w[0].0);
    let mut c1: f64 = 0.0;
    let mut c1_lag = None;
    for &l in lags {
        let (Some(near), Some(far)) = (lookup(&trace, t - l), lookup(&trace, t - 2.0 * l)) else {
            return Err(Error::InvalidConfig(format!("lag {l} is not on the time grid")));
        };
        let r = near / far;
        if r > c1 {
            c1 = r;
            c1_lag = Some(l);
        }
    }
    Ok(DDoublingReport { y, t, monotone: monotone_witness.is_none(), monotone_witness, trace, c1, c1_lag })
}

/// `rho_t(x, z) = d (d / t ∧ 1)`.
pub fn rho_t(d: f64, t: f64) -> f64 {
    d * (d / t).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEntry {
    pub theta0: f64,
    /// Smallest `C2` with the weighted sum below `C2 D_{tau,2tau}(y)` on all taus.
    pub c2: f64,
    pub tau: f64,
}

/// `sum_z pi_tau(z) K_{tau,2tau}(z, y)^2 e^{theta0 rho_tau(z, y)} <= C2 D_{tau,2tau}(y)`.
pub fn d_moment_bound(
    schedule: &ConductanceSchedule,
    y: usize,
    taus: &[f64],
    theta0s: &[f64],
) -> Result<Vec<MomentEntry>> {
    let g = schedule.graph();
    let n = g.vertex_count();
    let mode = walk_mode(schedule);
    let mut out: Vec<MomentEntry> = theta0s.iter().map(|&th| MomentEntry { theta0: th, c2: 0.0, tau: f64::NAN }).collect();
    for &tau in taus {
        if !(tau > 0.0) {
            return Err(out_of_range("tau", tau, "(0, inf)"));
        }
        let k = kernel(schedule, tau, 2.0 * tau, mode)?;
        let pi = k.source_measure();
        let d: f64 = (0..n).map(|x| pi[x] * k.get(x, y).powi(2)).sum();
        for e in out.iter_mut() {
            let m: f64 = (0..n)
                .map(|x| pi[x] * k.get(x, y).powi(2) * (e.theta0 * rho_t(g.distance(x, y) as f64, tau)).exp())
                .sum();
            if m / d > e.c2 {
                e.c2 = m / d;
                e.tau = tau;
            }
        }
    }
    Ok(out)
}
