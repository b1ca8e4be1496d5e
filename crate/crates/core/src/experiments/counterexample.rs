use super::budget::compute_a_t;
use crate::error::{out_of_range, Error, Result};
use crate::fit::{linear_fit, spread};
use crate::graphs::{counterexample_deltas, ConductanceSchedule};
use crate::heat_checks::{ghke_fit, GhkeMode};
use crate::kernels::{fmt_real, push_forward_discrete, sample_paths, WalkMode};
use serde::Serialize;
use std::io::Write;

/// Stationary `(AA, AB, BA, BB)` pair frequencies of the limiting A/B chain.
pub const PAIR_TARGET: [f64; 4] = [2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0];
/// Relative tolerance on each pair frequency.
pub const PAIR_TOL: f64 = 0.01;
/// Relative tolerance on the drift speed.
pub const SPEED_TOL: f64 = 0.05;
/// A fitted envelope constant is flagged once it exceeds this multiple of
/// its value at the first grid time.
pub const ENVELOPE_GROWTH_FLAG: f64 = 2.0;
/// Largest spread of `a_n / n^{1/2 + iota}` over the grid accepted as bounded.
pub const BUDGET_SPREAD_CAP: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleParams {
    pub eta: f64,
    pub iota: f64,
    pub n_max: usize,
    /// Times at which the law, `p_n` and the envelope fit are reported.
    pub grid: Vec<usize>,
    /// Window constant in `p_n = P(|X_n| <= c n^{(1 + iota)/2})`.
    pub window: f64,
    /// Monte Carlo paths for the cross-check (0 disables it).
    pub paths: usize,
    pub mc_horizon: usize,
    pub seed: u64,
}

impl CounterexampleParams {
    /// Dyadic grid `16, 32, ..., <= n_max` and window constant `1/4`.
    pub fn new(eta: f64, iota: f64, n_max: usize, seed: u64) -> Self {
        let grid = (4..).map(|k| 1usize << k).take_while(|&n| n <= n_max).collect();
        Self {
            eta,
            iota,
            n_max,
            grid,
            window: 0.25,
            paths: 0,
            mc_horizon: n_max.min(64),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawEntry {
    pub n: usize,
    pub a_n: f64,
    /// `a_n / n^{1/2 + iota}`.
    pub budget_ratio: f64,
    pub p_n: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub records: usize,
    pub skipped_underflow: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCheck {
    pub horizon: usize,
    pub paths: usize,
    pub seed: u64,
    pub cells: usize,
    /// Cells with `|freq - p| > 4 sqrt(p (1 - p) / N)`.
    pub violations: usize,
    pub worst_cell: Option<i64>,
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub entries: Vec<LawEntry>,
    pub budget_spread: f64,
    pub budget_bounded: bool,
    /// Steps violating `a_{n+1} - a_n <= (2/5)(delta_n + delta_{n+1})`.
    pub step_bound_violations: usize,
    pub p_strictly_decreasing: bool,
    /// Slope of `log p_n` against `n^iota`.
    pub p_slope: f64,
    pub lower_flagged: Vec<usize>,
    pub upper_flagged: Vec<usize>,
    pub ghkl_flag: bool,
    pub ghku_flag: bool,
    /// Cesaro average over the second half of the horizon.
    pub pair_frequencies: [f64; 4],
    pub monte_carlo: Option<MonteCarloCheck>,
}

impl CounterexampleReport {
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n,a_n,budget_ratio,p_n,mean,second_moment,c_upper,c_lower")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                e.n,
                fmt_real(e.a_n),
                fmt_real(e.budget_ratio),
                fmt_real(e.p_n),
                fmt_real(e.mean),
                fmt_real(e.second_moment),
                fmt_real(e.c_upper),
                fmt_real(e.c_lower)
            )?;
        }
        Ok(())
    }
}

/// Type of position `x` before step `k`: A when `k + x` is even.
fn is_a(k: usize, x: i64) -> bool {
    (k as i64 + x).rem_euclid(2) == 0
}

/// Joint law of the types before and after step `k`, given the law before it.
/// Moving keeps the type, staying switches it.
fn pair_step(schedule: &ConductanceSchedule, law: &[f64], k: usize) -> [f64; 4] {
    let g = schedule.graph();
    let mut out = [0.0; 4];
    for (x, &m) in law.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let total: f64 = g.incident(x).iter().map(|&(_, e)| schedule.edge_weight(k as f64, e)).sum();
        let stay = g.edge_id(x, x).map_or(0.0, |e| schedule.edge_weight(k as f64, e)) / total;
        let a = is_a(k, g.coordinate(x).unwrap_or(x as i64));
        let (same, other) = if a { (0, 1) } else { (3, 2) };
        out[same] += m * (1.0 - stay);
        out[other] += m * stay;
    }
    out
}

fn moments(schedule: &ConductanceSchedule, law: &[f64]) -> (f64, f64) {
    let g = schedule.graph();
    law.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (x, &p)| {
        let c = g.coordinate(x).unwrap_or(x as i64) as f64;
        (m1 + p * c, m2 + p * c * c)
    })
}

/// Evolves `delta_{x0}` to `n`, calling `visit(k, law before step k)` on
/// every step.
fn evolve(
    schedule: &ConductanceSchedule,
    x0: usize,
    n: usize,
    mut visit: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    let mut law = vec![0.0; schedule.vertex_count()];
    law[x0] = 1.0;
    for k in 1..=n {
        visit(k, &law)?;
        law = push_forward_discrete(schedule, &law, k - 1, k)?;
    }
    Ok(law)
}

fn monte_carlo(schedule: &ConductanceSchedule, origin: usize, exact: &[f64], horizon: usize, paths: usize, seed: u64) -> Result<MonteCarloCheck> {
    let sample = sample_paths(schedule, WalkMode::Dtrw, origin, horizon as f64, paths, seed)?;
    let n = paths as f64;
    let mut check = MonteCarloCheck {
        horizon,
        paths,
        seed,
        cells: 0,
        violations: 0,
        worst_cell: None,
        worst_excess: f64::NEG_INFINITY,
    };
    for (x, (&p, &count)) in exact.iter().zip(&sample.histogram).enumerate() {
        if p == 0.0 && count == 0 {
            continue;
        }
        check.cells += 1;
        let tol = 4.0 * (p * (1.0 - p) / n).sqrt();
        let excess = (count as f64 / n - p).abs() - tol;
        if excess > 0.0 {
            check.violations += 1;
        }
        if excess > check.worst_excess {
            check.worst_excess = excess;
            check.worst_cell = schedule.graph().coordinate(x);
        }
    }
    Ok(check)
}

/// Oscillating chain on the integers with `delta_n = min(0.49, n^{iota - 1/2})`:
/// budget growth, exact law, concentration `p_n` and envelope fits.
pub fn counterexample_suite(params: &CounterexampleParams) -> Result<CounterexampleReport> {
    if params.grid.is_empty() {
        return Err(Error::InvalidConfig("empty time grid".into()));
    }
    if !(params.window > 0.0) {
        return Err(out_of_range("window", params.window, "(0, inf)"));
    }
    let last = params.grid.iter().copied().max().unwrap();
    if last > params.n_max || (params.paths > 0 && params.mc_horizon > params.n_max) {
        return Err(Error::TruncationGuard(format!("grid reaches beyond n_max = {}", params.n_max)));
    }
    let deltas = counterexample_deltas(params.n_max, params.iota);
    let schedule = ConductanceSchedule::counterexample_z(params.n_max, params.eta, &deltas)?;
    let g = schedule.graph();
    let origin = (0..g.vertex_count()).find(|&x| g.coordinate(x) == Some(0)).unwrap();
    if g.boundary_distance(origin) <= params.n_max {
        return Err(Error::TruncationGuard("segment too short for the horizon".into()));
    }

    let budget = compute_a_t(&schedule, &[])?;
    let step_bound_violations = (0..params.n_max)
        .filter(|&k| budget.steps[k] > 0.4 * (deltas[k] + deltas[k + 1]) + 1e-15)
        .count();

    let mut grid = params.grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let half = last / 2;
    let mut pairs = [0.0; 4];
    let mut laws = std::collections::BTreeMap::new();
    let want = |k: usize| grid.binary_search(&k).is_ok() || (params.paths > 0 && k == params.mc_horizon);
    let end = if params.paths > 0 { last.max(params.mc_horizon) } else { last };
    let final_law = evolve(&schedule, origin, end, |k, law| {
        if want(k - 1) {
            laws.insert(k - 1, law.to_vec());
        }
        if k > half && k <= last {
            for (acc, p) in pairs.iter_mut().zip(pair_step(&schedule, law, k)) {
                *acc += p;
            }
        }
        Ok(())
    })?;
    laws.insert(end, final_law);
    let pair_frequencies = pairs.map(|p| p / (last - half) as f64);

    let mut entries = Vec::with_capacity(grid.len());
    for &n in &grid {
        let law = &laws[&n];
        let cut = params.window * (n as f64).powf((1.0 + params.iota) / 2.0);
        let p_n = law
            .iter()
            .enumerate()
            .filter(|&(x, _)| (g.coordinate(x).unwrap().abs() as f64) <= cut)
            .map(|(_, &p)| p)
            .sum();
        let (mean, second_moment) = moments(&schedule, law);
        let reach = (n as f64).min(4.0 * (n as f64).sqrt()).floor() as usize;
        let catalog: Vec<_> = (origin - reach..=origin + reach).map(|y| (0.0, n as f64, origin, y)).collect();
        let fit = ghke_fit(&schedule, &catalog, GhkeMode::Vector)?;
        entries.push(LawEntry {
            n,
            a_n: budget.a[n],
            budget_ratio: budget.a[n] / (n as f64).powf(0.5 + params.iota),
            p_n,
            mean,
            second_moment,
            c_upper: fit.c_upper,
            c_lower: fit.c_lower,
            records: fit.records.len(),
            skipped_underflow: fit.skipped_underflow,
        });
    }
    let ratios: Vec<f64> = entries.iter().map(|e| e.budget_ratio).collect();
    let budget_spread = spread(&ratios);
    let p_strictly_decreasing = entries.windows(2).all(|w| w[1].p_n < w[0].p_n);
    let xs: Vec<f64> = entries.iter().map(|e| (e.n as f64).powf(params.iota)).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.p_n.ln()).collect();
    let p_slope = linear_fit(&xs, &ys).0;
    let flagged = |f: &dyn Fn(&LawEntry) -> f64| -> Vec<usize> {
        let base = f(&entries[0]);
        entries.iter().filter(|e| f(e) > ENVELOPE_GROWTH_FLAG * base).map(|e| e.n).collect()
    };
    let lower_flagged = flagged(&|e| e.c_lower);
    let upper_flagged = flagged(&|e| e.c_upper);

    let monte_carlo = if params.paths > 0 {
        Some(monte_carlo(&schedule, origin, &laws[&params.mc_horizon], params.mc_horizon, params.paths, params.seed)?)
    } else {
        None
    };
    Ok(CounterexampleReport {
        params: params.clone(),
        entries,
        budget_spread,
        budget_bounded: budget_spread <= BUDGET_SPREAD_CAP,
        step_bound_violations,
        p_strictly_decreasing,
        p_slope,
        ghkl_flag: !lower_flagged.is_empty(),
        ghku_flag: !upper_flagged.is_empty(),
        lower_flagged,
        upper_flagged,
        pair_frequencies,
        monte_carlo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub eta: f64,
    pub eps: f64,
    pub n: usize,
    pub mean: f64,
    /// `(E X_n - E X_{n/2}) / (n - n/2)`. Compared with the prediction: it
    /// drops the O(1) displacement picked up near the reflecting origin.
    pub speed: f64,
    /// `E X_n / n`.
    pub mean_over_n: f64,
    /// `eta eps / (3 + 2 eps)`.
    pub predicted: f64,
    pub speed_rel_error: f64,
    pub speed_pass: bool,
    /// Cesaro average over the second half of the horizon.
    pub pair_frequencies: [f64; 4],
    pub pair_rel_error: f64,
    pub pair_pass: bool,
}

/// Exact evolution of the half-line drift chain from the origin.
pub fn drift_suite(eta: f64, eps: f64, n: usize) -> Result<DriftReport> {
    if n < 2 {
        return Err(out_of_range("n", n as f64, ">= 2"));
    }
    let schedule = ConductanceSchedule::drift_half_line(n, eta, eps)?;
    if schedule.graph().boundary_distance(0) <= n {
        return Err(Error::TruncationGuard("half-line window too short".into()));
    }
    let half = n / 2;
    let mut pairs = [0.0; 4];
    let mut mid_mean = 0.0;
    let law = evolve(&schedule, 0, n, |k, law| {
        if k - 1 == half {
            mid_mean = moments(&schedule, law).0;
        }
        if k > half {
            for (acc, p) in pairs.iter_mut().zip(pair_step(&schedule, law, k)) {
                *acc += p;
            }
        }
        Ok(())
    })?;
    let mean = moments(&schedule, &law).0;
    let pair_frequencies = pairs.map(|p| p / (n - half) as f64);
    let predicted = eta * eps / (3.0 + 2.0 * eps);
    let speed = (mean - mid_mean) / (n - half) as f64;
    let speed_rel_error = if predicted > 0.0 { (speed - predicted).abs() / predicted } else { speed.abs() };
    let pair_rel_error = pair_frequencies
        .iter()
        .zip(PAIR_TARGET)
        .map(|(p, q)| (p - q).abs() / q)
        .fold(0.0, f64::max);
    Ok(DriftReport {
        eta,
        eps,
        n,
        mean,
        speed,
        mean_over_n: mean / n as f64,
        predicted,
        speed_rel_error,
        speed_pass: speed_rel_error <= SPEED_TOL,
        pair_frequencies,
        pair_rel_error,
        pair_pass: pair_rel_error <= PAIR_TOL,
    })
}
