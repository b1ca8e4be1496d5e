use super::diagonal::on_diagonal_sup;
use crate::error::{out_of_range, Error, Result};
use crate::fit::log_log_slope;
use crate::geometry::VolumeFunction;
use crate::graphs::ConductanceSchedule;
use crate::kernels::{compose_discrete, one_step_kernel, Kernel, KernelMatrix};
use crate::profiles::conductance_steps;
use crate::linalg::DenseMatrix;
use serde::Serialize;

/// `kappa` with `Phi_{K_k, pi_k}(s) >= kappa s^{-1/d}` for `s <= pi(V)/2`,
/// read off the exact conductance profile of step `k`.
pub fn certified_kappa(schedule: &ConductanceSchedule, k: usize, d: f64) -> Result<f64> {
    let kern = one_step_kernel::<f64>(schedule, k as f64)?;
    let pi = kern.source_measure();
    let half = 0.5 * pi.iter().sum::<f64>();
    let steps = conductance_steps(&kern.dense(), pi)?;
    Ok(steps
        .iter()
        .filter(|&&(m, _)| m <= half)
        .map(|&(m, phi)| phi * m.powf(1.0 / d))
        .fold(f64::INFINITY, f64::min))
}

/// Smallest `c0 >= 2` for which every `gamma_n >= c0` has some `l` with
/// `1/3 <= (1 + gamma_l)/(1 + gamma_n) <= 2/3`; fails past `cap`.
pub fn gamma_condition(gamma: &[f64], cap: f64) -> Result<f64> {
    let mut c0: f64 = 2.0;
    for (n, &g) in gamma.iter().enumerate() {
        let ok = gamma[..=n].iter().any(|&gl| {
            let r = (1.0 + gl) / (1.0 + g);
            (1.0 / 3.0..=2.0 / 3.0).contains(&r)
        });
        if !ok && g >= c0 {
            if g >= cap {
                return Err(Error::GammaConditionFailed { n });
            }
            c0 = c0.max(g * (1.0 + 1e-12) + f64::MIN_POSITIVE);
        }
    }
    Ok(c0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DhmpReport {
    pub d: f64,
    /// `kappa_m`, `m = 1..=horizon`.
    pub kappas: Vec<f64>,
    /// `gamma_n = sum_{m <= n} kappa_m^2`, `n = 0..=horizon`.
    pub gamma: Vec<f64>,
    pub c0: f64,
    /// `sup_{x,y} K_{0,n}(x,y) / pi_n(y)`, `n = 1..=horizon`.
    pub measured: Vec<f64>,
    /// Smallest `c1` with `measured <= c1 (1 + gamma_n)^{-d/2}`.
    pub c1: f64,
    /// Slope of `log measured` against `log(1 + gamma_n)` on the fit window.
    pub decay_exponent: f64,
    pub fit_window: (usize, usize),
}

/// On-diagonal decay `sup K_{0,n}/pi_n` against `c1 (1 + gamma_n)^{-d/2}`.
/// Without explicit `kappas` each step is certified from its exact
/// conductance profile.
pub fn dhmp_bound_check(
    schedule: &ConductanceSchedule,
    d: f64,
    horizon: usize,
    kappas: Option<Vec<f64>>,
    fit_window: (usize, usize),
) -> Result<DhmpReport> {
    if !(d > 0.0) {
        return Err(out_of_range("d", d, "(0, inf)"));
    }
    let kappas = match kappas {
        Some(k) if k.len() >= horizon => k[..horizon].to_vec(),
        Some(k) => return Err(Error::InvalidConfig(format!("{} kappas for horizon {horizon}", k.len()))),
        None => {
            let mut out: Vec<f64> = Vec::with_capacity(horizon);
            let mut prev: Option<(DenseMatrix<f64>, Vec<f64>)> = None;
            for k in 1..=horizon {
                let kern = one_step_kernel::<f64>(schedule, k as f64)?;
                let key = (kern.dense(), kern.source_measure().to_vec());
                if prev.as_ref() == Some(&key) {
                    out.push(*out.last().unwrap());
                    continue;
                }
                out.push(certified_kappa(schedule, k, d)?);
                prev = Some(key);
            }
            out
        }
    };
    let mut gamma = vec![0.0];
    for &k in &kappas {
        gamma.push(gamma.last().unwrap() + k * k);
    }
    let sup_kappa = kappas.iter().copied().fold(0.0, f64::max);
    let c0 = gamma_condition(&gamma, 2.0 + 3.0 * sup_kappa * sup_kappa)?;
    let mut measured = Vec::with_capacity(horizon);
    let mut acc: Kernel<f64> = compose_discrete(schedule, 0, 0)?;
    for n in 1..=horizon {
        let step = one_step_kernel::<f64>(schedule, n as f64)?;
        let m = acc.dense().matmul(&step.dense());
        acc = Kernel::new(
            KernelMatrix::Dense(m),
            0.0,
            n as f64,
            acc.source_measure().to_vec(),
            step.target_measure().to_vec(),
        );
        measured.push(on_diagonal_sup(&acc).0);
    }
    let c1 = (1..=horizon)
        .map(|n| measured[n - 1] * (1.0 + gamma[n]).powf(d / 2.0))
        .fold(0.0, f64::max);
    let (lo, hi) = (fit_window.0.max(1), fit_window.1.min(horizon));
    let xs: Vec<f64> = (lo..=hi).map(|n| 1.0 + gamma[n]).collect();
    let ys: Vec<f64> = (lo..=hi).map(|n| measured[n - 1]).collect();
    Ok(DhmpReport {
        d,
        kappas,
        gamma,
        c0,
        measured,
        c1,
        decay_exponent: log_log_slope(&xs, &ys),
        fit_window: (lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlocalEntry {
    pub s: usize,
    pub t: usize,
    pub measured: f64,
    /// `measured * v((t-s)^{1/beta})`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlocalReport {
    pub beta: f64,
    /// Smallest `A` for which the jump lower bound holds on the checked pairs.
    pub a_fitted: f64,
    pub a_witness: (usize, usize, usize),
    pub entries: Vec<NonlocalEntry>,
    /// Smallest `c3` with `measured <= c3 / v((t-s)^{1/beta})`.
    pub c3: f64,
    /// Slope of `log measured` against `log(t - s)`.
    pub decay_exponent: f64,
}

/// Checks `K_n(x,y)/pi_n(y) >= d(x,y)^{-beta} / (A v(d(x,y)))` on every step
/// and every pair within `range` (all pairs when `None`), then fits `c3`.
pub fn nonlocal_bound_check(
    schedule: &ConductanceSchedule,
    beta: f64,
    v: &VolumeFunction,
    a_const: Option<f64>,
    range: Option<usize>,
    pairs: &[(usize, usize)],
) -> Result<NonlocalReport> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(out_of_range("beta", beta, "(0, 2)"));
    }
    v.validate()?;
    let g = schedule.graph();
    let horizon = schedule.horizon().floor() as usize;
    let mut a_fitted: f64 = 0.0;
    let mut a_witness = (0, 0, 0);
    for k in 1..=horizon {
        let kern = one_step_kernel::<f64>(schedule, k as f64)?;
        let pi = kern.target_measure();
        for x in 0..g.vertex_count() {
            for y in 0..g.vertex_count() {
                let dist = g.distance(x, y);
                if x == y || range.is_some_and(|r| dist > r) {
                    continue;
                }
                let df = dist as f64;
                let need = df.powf(-beta) / (v.eval(df) * (kern.get(x, y) / pi[y]));
                if need > a_fitted {
                    a_fitted = need;
                    a_witness = (k, x, y);
                }
            }
        }
    }
    if let Some(a) = a_const {
        if a_fitted > a {
            let (t, x, y) = a_witness;
            return Err(Error::HypothesisViolated { t, x, y, ratio: a_fitted / a });
        }
    }
    let mut entries = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let k = compose_discrete::<f64>(schedule, s, t)?;
        let measured = on_diagonal_sup(&k).0;
        let scale = v.eval(((t - s) as f64).powf(1.0 / beta));
        entries.push(NonlocalEntry { s, t, measured, scaled: measured * scale });
    }
    let c3 = entries.iter().map(|e| e.scaled).fold(0.0, f64::max);
    let fit: Vec<&NonlocalEntry> = entries.iter().filter(|e| e.t > e.s).collect();
    let xs: Vec<f64> = fit.iter().map(|e| (e.t - e.s) as f64).collect();
    let ys: Vec<f64> = fit.iter().map(|e| e.measured).collect();
    Ok(NonlocalReport { beta, a_fitted, a_witness, entries, c3, decay_exponent: log_log_slope(&xs, &ys) })
}
