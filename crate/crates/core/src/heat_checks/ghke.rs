use super::lemmas::{rate_function, rho_t};
use crate::error::{Error, Result};
use crate::geometry::ball_volume;
use crate::graphs::ConductanceSchedule;
use crate::kernels::{fmt_real, kernel, propagate_measure, walk_mode};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

/// Records with `K` below this are dropped: the envelope ratios would only
/// measure floating-point underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-280;
/// Above this many vertices the fit propagates rows instead of building kernels.
pub const DENSE_FIT_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GhkeMode {
    Auto,
    Dense,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianRecord {
    pub s: f64,
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub k: f64,
    /// `v(sqrt(t - s)) = pi_s(B(y, sqrt(t - s)))`.
    pub v_sqrt: f64,
    /// `mu_{s,t}(y)`.
    pub mu: f64,
    pub d: usize,
    /// `rho_{t-s}(x, y)`.
    pub rho: f64,
    /// Smallest `C >= 1` for the upper envelope at this record.
    pub upper_ratio: f64,
    /// Smallest `C >= 1` for the lower envelope at this record.
    pub lower_ratio: f64,
    /// Smallest `C >= 1` for the rate-function upper bound.
    pub ghku_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianFit {
    pub records: Vec<GaussianRecord>,
    pub c_upper: f64,
    pub c_lower: f64,
    /// `max(c_upper, c_lower)`.
    pub c_star: f64,
    pub c_ghku: f64,
    pub upper_witness: Option<usize>,
    pub lower_witness: Option<usize>,
    /// Catalog entries dropped for `d > t - s`, the boundary guard, or underflow.
    pub skipped_range: usize,
    pub skipped_guard: usize,
    pub skipped_underflow: usize,
}

impl GaussianFit {
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "s,t,x,y,K,v_sqrt,mu,d,upper_ratio,lower_ratio")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_real(r.s),
                fmt_real(r.t),
                r.x,
                r.y,
                fmt_real(r.k),
                fmt_real(r.v_sqrt),
                fmt_real(r.mu),
                r.d,
                fmt_real(r.upper_ratio),
                fmt_real(r.lower_ratio)
            )?;
        }
        Ok(())
    }

    /// Errors when the lower envelope needs a constant above `cap`.
    pub fn check_lower(&self, cap: f64) -> Result<()> {
        if self.c_lower > cap {
            return Err(Error::InfeasibleLowerEnvelope { c_lower: self.c_lower, cap });
        }
        Ok(())
    }
}

/// Smallest `C >= 1` with `f(C) >= target` for increasing `f`.
fn least_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if f(1.0) >= target {
        return 1.0;
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    hi
}

/// Smallest `C >= 1` with `f(C) <= target` for decreasing `f`.
fn least_decreasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= 0.0 {
        return f64::INFINITY;
    }
    least_increasing(|c| -f(c), -target)
}

/// Fits the two-sided Gaussian constant over `(s, t, x, y)`. Entries with
/// `d(x, y) > t - s`, walks that could reach a truncation boundary, and
/// underflowed kernels are skipped and counted.
pub fn ghke_fit(
    schedule: &ConductanceSchedule,
    catalog: &[(f64, f64, usize, usize)],
    mode: GhkeMode,
) -> Result<GaussianFit> {
    let g = schedule.graph();
    let n = g.vertex_count();
    let walk = walk_mode(schedule);
    let dense = match mode {
        GhkeMode::Auto => n <= DENSE_FIT_LIMIT,
        GhkeMode::Dense => true,
        GhkeMode::Vector => false,
    };
    let mut groups: BTreeMap<(u64, u64), Vec<(usize, usize)>> = BTreeMap::new();
    let (mut skipped_range, mut skipped_guard, mut skipped_underflow) = (0, 0, 0);
    for &(s, t, x, y) in catalog {
        if x >= n || y >= n || !(s <= t) {
            return Err(Error::InvalidConfig(format!("bad catalog entry ({s}, {t}, {x}, {y})")));
        }
        let tau = t - s;
        if g.distance(x, y) as f64 > tau {
            skipped_range += 1;
            continue;
        }
        if g.is_truncated() && g.boundary_distance(x) as f64 <= tau {
            skipped_guard += 1;
            continue;
        }
        groups.entry((s.to_bits(), t.to_bits())).or_default().push((x, y));
    }
    let mut records = Vec::new();
    for ((sb, tb), pairs) in groups {
        let (s, t) = (f64::from_bits(sb), f64::from_bits(tb));
        let tau = t - s;
        let pi_s = schedule.vertex_conductance(s)?;
        let mu = propagate_measure(schedule, &pi_s, s, t, walk)?;
        let entry: Box<dyn Fn(usize, usize) -> f64> = if dense {
            let k = kernel(schedule, s, t, walk)?;
            Box::new(move |x, y| k.get(x, y))
        } else {
            let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for &(x, _) in &pairs {
                if let std::collections::btree_map::Entry::Vacant(e) = rows.entry(x) {
                    let mut d = vec![0.0; n];
                    d[x] = 1.0;
                    e.insert(propagate_measure(schedule, &d, s, t, walk)?);
                }
            }
            Box::new(move |x, y| rows[&x][y])
        };
        for (x, y) in pairs {
            let k = entry(x, y);
            if k < UNDERFLOW_FLOOR {
                skipped_underflow += 1;
                continue;
            }
            let d = g.distance(x, y);
            let df = d as f64;
            let v_sqrt = ball_volume(g, &pi_s, y, tau.sqrt());
            let base = mu[y] / v_sqrt;
            let a = if tau > 0.0 { df * df / tau } else { 0.0 };
            let upper_ratio = least_increasing(|c| c * base * (-a / c).exp(), k);
            let lower_ratio = least_decreasing(|c| base / c * (-c * a).exp(), k);
            let rate = if tau > 0.0 { tau * rate_function(df / tau, walk) } else { 0.0 };
            let ghku_ratio = least_increasing(|c| c / v_sqrt * (-rate / c).exp(), k);
            records.push(GaussianRecord {
                s,
                t,
                x,
                y,
                k,
                v_sqrt,
                mu: mu[y],
                d,
                rho: if tau > 0.0 { rho_t(df, tau) } else { 0.0 },
                upper_ratio,
                lower_ratio,
                ghku_ratio,
            });
        }
    }
    let argmax = |f: &dyn Fn(&GaussianRecord) -> f64| {
        records
            .iter()
            .enumerate()
            .fold((1.0f64, None), |acc, (i, r)| if f(r) > acc.0 { (f(r), Some(i)) } else { acc })
    };
    let (c_upper, upper_witness) = argmax(&|r| r.upper_ratio);
    let (c_lower, lower_witness) = argmax(&|r| r.lower_ratio);
    let (c_ghku, _) = argmax(&|r| r.ghku_ratio);
    Ok(GaussianFit {
        c_star: c_upper.max(c_lower),
        records,
        c_upper,
        c_lower,
        c_ghku,
        upper_witness,
        lower_witness,
        skipped_range,
        skipped_guard,
        skipped_underflow,
    })
}
