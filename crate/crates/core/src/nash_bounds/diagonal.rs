use super::calculus::{psi_recursion, psi_uniform};
use crate::error::{out_of_range, Error, Result};
use crate::graphs::ConductanceSchedule;
use crate::kernels::{backward_family, compose_discrete, csrw_kernel, one_step_kernel, Exponent, Kernel, WalkMode, MAX_ODE_STEP};
use crate::linalg::DenseMatrix;
use crate::profiles::{regularity_check, NashFunction, PowerPiece, ProfileMode, Profiles, RegularityCheck};
use rayon::prelude::*;
use serde::Serialize;

/// Relative slack on every "measured <= bound" comparison.
pub const BOUND_SLACK: f64 = 1e-12;
/// Poisson tail mass (times `sup psi`) left out of the series.
pub const POISSON_TAIL: f64 = 1e-12;

/// `2 / Lambda_{Q,pi}(4s)` for `Q = K_k^2` and `pi = pi_k`, from exact
/// enumeration; an upper bound on the Nash profile of step `k`.
pub fn certified_nash(schedule: &ConductanceSchedule, k: usize) -> Result<NashFunction> {
    let kern = one_step_kernel::<f64>(schedule, k as f64)?;
    let a = kern.dense();
    let q = a.matmul(&a);
    Ok(Profiles::compute(&q, kern.source_measure(), ProfileMode::Exact)?.nash_upper_function())
}

/// [`certified_nash`] for steps `1..=n`, reusing the profile whenever the
/// step kernel and measure repeat.
pub fn certified_nash_sequence(schedule: &ConductanceSchedule, n: usize) -> Result<Vec<NashFunction>> {
    let mut out: Vec<NashFunction> = Vec::with_capacity(n);
    let mut last: Option<(DenseMatrix<f64>, Vec<f64>)> = None;
    for k in 1..=n {
        let kern = one_step_kernel::<f64>(schedule, k as f64)?;
        let a = kern.dense();
        let pi = kern.source_measure().to_vec();
        if let Some((pa, ppi)) = &last {
            if pa.max_abs_diff(&a) == 0.0 && *ppi == pi {
                out.push(out.last().unwrap().clone());
                continue;
            }
        }
        let q = a.matmul(&a);
        out.push(Profiles::compute(&q, &pi, ProfileMode::Exact)?.nash_upper_function());
        last = Some((a, pi));
    }
    Ok(out)
}

/// Pointwise maximum of step functions (every piece of exponent 0).
pub fn step_max(fs: &[NashFunction]) -> Result<NashFunction> {
    let mut starts: Vec<f64> = Vec::new();
    for f in fs {
        let p = f
            .pieces()
            .filter(|p| p.iter().all(|q| q.exp == 0.0))
            .ok_or_else(|| Error::InvalidConfig("step_max needs step functions".into()))?;
        starts.extend(p.iter().map(|q| q.start));
    }
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    let pieces = starts
        .into_iter()
        .map(|s| PowerPiece { start: s, coeff: fs.iter().map(|f| f.eval(s)).fold(0.0, f64::max), exp: 0.0 })
        .collect();
    NashFunction::piecewise(pieces)
}

/// `sup_{x,y} K(x,y) / target(y)` with the attaining pair.
pub fn on_diagonal_sup(k: &Kernel<f64>) -> (f64, (usize, usize)) {
    let a = k.dense();
    let nu = k.target_measure();
    let mut best = (0.0, (0, 0));
    for x in 0..a.rows() {
        for (y, &v) in a.row(x).iter().enumerate() {
            let r = v / nu[y];
            if r > best.0 {
                best = (r, (x, y));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalEntry {
    pub s: f64,
    pub t: f64,
    /// `sup_{x,y} K_{s,t}(x,y) / pi_t(y)`.
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub witness: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalBoundReport {
    pub mode: WalkMode,
    pub entries: Vec<DiagonalEntry>,
    /// Smallest constant with `measured <= C' bound` on every pair.
    pub c_n_prime: f64,
    pub c_n_prime_witness: (f64, f64),
    pub regularity: Option<RegularityCheck>,
}

impl DiagonalBoundReport {
    fn finish(mode: WalkMode, entries: Vec<DiagonalEntry>, regularity: Option<RegularityCheck>) -> Self {
        let mut c = 0.0;
        let mut w = (0.0, 0.0);
        for e in &entries {
            if e.ratio > c {
                c = e.ratio;
                w = (e.s, e.t);
            }
        }
        DiagonalBoundReport { mode, entries, c_n_prime: c, c_n_prime_witness: w, regularity }
    }
}

/// Geometric samples `s0 2^{k/4}`, `k = 0..=80`, for regularity checks.
pub fn regularity_samples(s0: f64) -> Vec<f64> {
    (0..=80).map(|k| s0 * 2f64.powf(k as f64 / 4.0)).collect()
}

/// `sup K_{s,t}/pi_t <= C'_n psi((t-s)/3)` on integer pairs, with
/// `psi(t) = 1/F^{-1}(t; c_star, N)` and `C'_n` fitted.
pub fn verify_diag_bound_dtrw(
    schedule: &ConductanceSchedule,
    pairs: &[(usize, usize)],
    n: &NashFunction,
    c_n: f64,
    s0: f64,
    c_star: f64,
) -> Result<DiagonalBoundReport> {
    if !(c_star > 0.0) {
        return Err(out_of_range("c_star", c_star, "(0, inf)"));
    }
    let reg = regularity_check(n, c_n, s0, &regularity_samples(s0)).into_result()?;
    let entries: Vec<Result<DiagonalEntry>> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let k = compose_discrete::<f64>(schedule, s, t)?;
            let (measured, witness) = on_diagonal_sup(&k);
            let bound = psi_uniform((t - s) as f64 / 3.0, c_star, n)?;
            Ok(DiagonalEntry { s: s as f64, t: t as f64, measured, bound, ratio: measured / bound, witness })
        })
        .collect();
    Ok(DiagonalBoundReport::finish(
        WalkMode::Dtrw,
        entries.into_iter().collect::<Result<_>>()?,
        Some(reg),
    ))
}

/// `E[f(Z)]` for `Z ~ Poisson(mean)` and `0 <= f <= f_max`, truncated once the
/// remaining tail contributes less than `POISSON_TAIL`.
pub fn poisson_expectation(mean: f64, f_max: f64, f: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    if !(mean >= 0.0) || mean.is_infinite() {
        return Err(out_of_range("Poisson mean", mean, "[0, inf)"));
    }
    let limit = (10.0 * mean + 1000.0) as usize;
    let mut total = 0.0;
    let mut mass = 0.0;
    for k in 0..=limit {
        let logp = -mean + k as f64 * mean.max(f64::MIN_POSITIVE).ln() - ln_factorial(k);
        let p = if mean == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { logp.exp() };
        mass += p;
        if p > 0.0 {
            total += p * f(k)?;
        }
        if k as f64 >= mean && (1.0 - mass).max(0.0) * f_max < POISSON_TAIL {
            return Ok(total);
        }
    }
    Err(Error::SeriesTruncationFailed { mean })
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// CSRW form: `measured <= C' E[psi(Z/3)]` with `Z ~ Poisson(2(t-s))`.
pub fn verify_diag_bound_csrw(
    schedule: &ConductanceSchedule,
    pairs: &[(f64, f64)],
    n: &NashFunction,
    c_star: f64,
) -> Result<DiagonalBoundReport> {
    if !(c_star > 0.0) {
        return Err(out_of_range("c_star", c_star, "(0, inf)"));
    }
    let psi0 = psi_uniform(0.0, c_star, n)?;
    let entries: Vec<Result<DiagonalEntry>> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let k = csrw_kernel::<f64>(schedule, s, t, MAX_ODE_STEP)?;
            let (measured, witness) = on_diagonal_sup(&k);
            let bound = poisson_expectation(2.0 * (t - s), psi0, |z| psi_uniform(z as f64 / 3.0, c_star, n))?;
            Ok(DiagonalEntry { s, t, measured, bound, ratio: measured / bound, witness })
        })
        .collect();
    Ok(DiagonalBoundReport::finish(WalkMode::Csrw, entries.into_iter().collect::<Result<_>>()?, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffEqEntry {
    pub m: usize,
    pub n: usize,
    /// `||K_{m,n}||^2_{L^1(pi_n) -> L^2(pi_m)}`.
    pub measured_sq: f64,
    pub psi: f64,
    pub pass: bool,
    /// `| ||K||_{1->2} - ||K*||_{2->inf} |`.
    pub duality_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffEqReport {
    pub entries: Vec<DiffEqEntry>,
    pub violations: usize,
    pub worst_ratio: f64,
    pub worst: (usize, usize),
    pub max_duality_defect: f64,
}

/// `psi_n` tables for every `n <= n_max`, seeded at `1 / min pi_n`.
pub fn psi_tables(schedule: &ConductanceSchedule, profiles: &[NashFunction], n_max: usize) -> Result<Vec<Vec<f64>>> {
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let pi = schedule.vertex_conductance(n as f64)?;
            let seed = 1.0 / pi.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(psi_recursion(profiles, n, seed)?.values)
        })
        .collect()
}

/// Checks `||K_{m,n}||^2_{1->2} <= psi_n(n-m)` for all `0 <= m <= n <= n_max`
/// with the certified profiles and no fitted constant.
pub fn diff_eq_check(schedule: &ConductanceSchedule, n_max: usize) -> Result<DiffEqReport> {
    let profiles = certified_nash_sequence(schedule, n_max.max(1))?;
    let tables = psi_tables(schedule, &profiles, n_max)?;
    let per_n: Vec<Result<Vec<DiffEqEntry>>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let fam = backward_family::<f64>(schedule, n)?;
            fam.iter()
                .enumerate()
                .map(|(m, k)| {
                    let a = k.norm(Exponent::One, Exponent::Two)?;
                    let b = k.adjoint().norm(Exponent::Two, Exponent::Inf)?;
                    let psi = tables[n][n - m];
                    let measured_sq = a * a;
                    Ok(DiffEqEntry {
                        m,
                        n,
                        measured_sq,
                        psi,
                        pass: measured_sq <= psi * (1.0 + BOUND_SLACK),
                        duality_defect: (a - b).abs(),
                    })
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for e in per_n {
        entries.extend(e?);
    }
    let mut rep = DiffEqReport { entries, violations: 0, worst_ratio: 0.0, worst: (0, 0), max_duality_defect: 0.0 };
    for e in &rep.entries {
        let r = e.measured_sq / e.psi;
        if r > rep.worst_ratio {
            rep.worst_ratio = r;
            rep.worst = (e.m, e.n);
        }
        rep.max_duality_defect = rep.max_duality_defect.max(e.duality_defect);
    }
    rep.violations = rep.entries.iter().filter(|e| !e.pass).count();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnReport {
    pub m: usize,
    /// `A_n` for `n = m..=n_max`.
    pub a: Vec<f64>,
    /// `||K_{m,n}||_{L^1(pi_n) -> L^inf(pi_m)}`.
    pub measured: Vec<f64>,
    /// `M_N = sup_n A_n ||K_{m,n}||_{1->inf}`.
    pub m_n: f64,
    pub pass: bool,
}

/// Largest `A_n` allowed by `A_n^2 <= sup_{m<=l<=n} A_l / psi_n(n-l)`, namely
/// `max(1/psi_n(0), sqrt(max_{l<n} A_l / psi_n(n-l)))`, then `M_N <= 1`.
pub fn a_n_certificate(
    schedule: &ConductanceSchedule,
    m: usize,
    n_max: usize,
    profiles: &[NashFunction],
) -> Result<AnReport> {
    if m > n_max {
        return Err(out_of_range("m", m as f64, "[0, n_max]"));
    }
    let tables = psi_tables(schedule, profiles, n_max)?;
    let mut a: Vec<f64> = Vec::with_capacity(n_max - m + 1);
    for n in m..=n_max {
        let psi = &tables[n];
        let mut best = 1.0 / psi[0];
        for (i, &al) in a.iter().enumerate() {
            let l = m + i;
            best = best.max((al / psi[n - l]).sqrt());
        }
        a.push(best);
    }
    let measured: Vec<f64> = (m..=n_max)
        .into_par_iter()
        .map(|n| Ok(compose_discrete::<f64>(schedule, m, n)?.norm(Exponent::One, Exponent::Inf)?))
        .collect::<Result<_>>()?;
    let m_n = a.iter().zip(&measured).map(|(x, y)| x * y).fold(0.0, f64::max);
    Ok(AnReport { m, a, measured, m_n, pass: m_n <= 1.0 + BOUND_SLACK })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{ConductanceSchedule, Graph, Growth, TimeMode};
    use std::sync::Arc;

    fn monotone_cycle(n: usize, horizon: f64) -> ConductanceSchedule {
        let g = Arc::new(Graph::cycle(n).unwrap().with_loops().unwrap());
        let growth = (0..g.edge_count())
            .map(|e| Growth::Linear { slope: 0.05 * (1 + e % 3) as f64, cap: 1e9 })
            .collect();
        ConductanceSchedule::monotone(g, vec![1.0; n * 2], growth, TimeMode::Discrete, horizon).unwrap()
    }

    #[test]
    fn poisson_mean_of_identity() {
        let e = poisson_expectation(3.5, 1.0, |_| Ok(1.0)).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let e = poisson_expectation(0.0, 1.0, |k| Ok(k as f64)).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn diff_eq_holds_on_small_monotone_cycle() {
        let s = monotone_cycle(8, 10.0);
        let rep = diff_eq_check(&s, 10).unwrap();
        assert_eq!(rep.violations, 0, "worst {} at {:?}", rep.worst_ratio, rep.worst);
        assert!(rep.max_duality_defect < 1e-10);
        let profiles = certified_nash_sequence(&s, 10).unwrap();
        let an = a_n_certificate(&s, 0, 10, &profiles).unwrap();
        assert!(an.pass, "M_N = {}", an.m_n);
    }

    #[test]
    fn step_max_is_pointwise() {
        let a = NashFunction::piecewise(vec![
            PowerPiece { start: 0.0, coeff: 1.0, exp: 0.0 },
            PowerPiece { start: 2.0, coeff: 3.0, exp: 0.0 },
        ])
        .unwrap();
        let b = NashFunction::piecewise(vec![
            PowerPiece { start: 0.0, coeff: 2.0, exp: 0.0 },
            PowerPiece { start: 3.0, coeff: 2.5, exp: 0.0 },
        ])
        .unwrap();
        let m = step_max(&[a.clone(), b.clone()]).unwrap();
        for k in 0..50 {
            let s = k as f64 * 0.1;
            assert_eq!(m.eval(s), a.eval(s).max(b.eval(s)));
        }
    }
}
