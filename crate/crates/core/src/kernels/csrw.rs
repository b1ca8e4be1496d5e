use super::kernel::{step_csr, Kernel, KernelMatrix};
use crate::error::{out_of_range, Error, Result};
use crate::graphs::ConductanceSchedule;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;
use rayon::prelude::*;

/// Max-norm gap between successive step halvings that counts as converged.
pub const ODE_TOLERANCE: f64 = 1e-9;
/// Largest row-sum drift that is silently renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-8;
pub const MAX_HALVINGS: usize = 12;
pub const MAX_ODE_STEP: f64 = 0.05;

/// Step-halving policy shared by every backward/forward integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub step: f64,
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            step: MAX_ODE_STEP,
            tolerance: ODE_TOLERANCE,
            max_halvings: MAX_HALVINGS,
        }
    }
}

impl OdeOptions {
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= MAX_ODE_STEP) {
            return Err(out_of_range("ode_step", step, "(0, 0.05]"));
        }
        Ok(Self {
            step,
            ..Self::default()
        })
    }
}

/// Smooth pieces of `[s, t]` split at the schedule's breakpoints.
fn pieces(schedule: &ConductanceSchedule, s: f64, t: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![s];
    cuts.extend(schedule.breakpoints().into_iter().filter(|&b| b > s && b < t));
    cuts.push(t);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Evaluation time nudged into the open piece so one-sided limits are used
/// at jump discontinuities.
fn inside(sigma: f64, a: f64, b: f64) -> f64 {
    let eps = 1e-9 * (b - a);
    sigma.clamp(a + eps, b - eps)
}

/// `K_sigma` with absorbing rows replaced by the identity.
fn generator<T: Scalar>(schedule: &ConductanceSchedule, sigma: f64, absorbing: Option<&[bool]>) -> CsrMatrix<T> {
    let k = step_csr::<T>(schedule, sigma);
    match absorbing {
        None => k,
        Some(mask) => {
            let rows = (0..k.rows())
                .map(|x| {
                    if mask[x] {
                        vec![(x, T::one())]
                    } else {
                        k.row(x).collect()
                    }
                })
                .collect();
            CsrMatrix::from_rows(k.cols(), rows)
        }
    }
}

/// `out = (K - I) x` for `x` stored row-major with `cols` columns.
fn apply_generator<T: Scalar>(k: &CsrMatrix<T>, x: &[T], cols: usize, out: &mut [T]) {
    let body = |(i, row): (usize, &mut [T])| {
        for (o, &xi) in row.iter_mut().zip(&x[i * cols..(i + 1) * cols]) {
            *o = -xi;
        }
        for (j, v) in k.row(i) {
            for (o, &xj) in row.iter_mut().zip(&x[j * cols..(j + 1) * cols]) {
                *o += v * xj;
            }
        }
    };
    if k.nnz() * cols >= 1 << 15 {
        out.par_chunks_mut(cols).enumerate().for_each(body);
    } else {
        out.chunks_mut(cols).enumerate().for_each(body);
    }
}

/// `out = x (K - I)` for a row vector `x`.
fn apply_generator_left<T: Scalar>(k: &CsrMatrix<T>, x: &[T], out: &mut [T]) {
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = -xi;
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (j, v) in k.row(i) {
            out[j] += xi * v;
        }
    }
}

fn axpy<T: Scalar>(y: &mut [T], x: &[T], a: T, z: &[T]) {
    for ((yi, &xi), &zi) in y.iter_mut().zip(x).zip(z) {
        *yi = xi + a * zi;
    }
}

/// Classical RK4 along the pieces. `backward` runs sigma from `t` down to `s`
/// (so `dx/dtau = L x` with `tau = t - sigma`); otherwise sigma runs upward.
fn rk4<T: Scalar>(
    pieces: &[(f64, f64)],
    backward: bool,
    h: f64,
    mut x: Vec<T>,
    deriv: &dyn Fn(f64, &[T], &mut [T]),
) -> Vec<T> {
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut tmp = vec![T::zero(); n];
    let order: Vec<(f64, f64)> = if backward {
        pieces.iter().rev().copied().collect()
    } else {
        pieces.to_vec()
    };
    for (a, b) in order {
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let steps = (len / h).ceil().max(1.0) as usize;
        let hh = len / steps as f64;
        let th = T::of(hh);
        let half = T::of(hh / 2.0);
        for i in 0..steps {
            let (s0, s_mid, s1) = if backward {
                let s0 = b - i as f64 * hh;
                (s0, s0 - hh / 2.0, s0 - hh)
            } else {
                let s0 = a + i as f64 * hh;
                (s0, s0 + hh / 2.0, s0 + hh)
            };
            deriv(inside(s0, a, b), &x, &mut k1);
            axpy(&mut tmp, &x, half, &k1);
            deriv(inside(s_mid, a, b), &tmp, &mut k2);
            axpy(&mut tmp, &x, half, &k2);
            deriv(inside(s_mid, a, b), &tmp, &mut k3);
            axpy(&mut tmp, &x, th, &k3);
            deriv(inside(s1, a, b), &tmp, &mut k4);
            let sixth = th / T::of(6.0);
            let two = T::of(2.0);
            for j in 0..n {
                x[j] += sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
            }
        }
    }
    x
}

fn richardson<T: Scalar>(opts: &OdeOptions, run: impl Fn(f64) -> Vec<T>) -> Result<Vec<T>> {
    let mut h = opts.step;
    let mut coarse = run(h);
    let mut change = f64::INFINITY;
    for _ in 0..=opts.max_halvings {
        h /= 2.0;
        let fine = run(h);
        change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max);
        if change < opts.tolerance {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::OdeNotConverged {
        halvings: opts.max_halvings,
        change,
    })
}

fn check_interval(schedule: &ConductanceSchedule, s: f64, t: f64) -> Result<()> {
    schedule.check_time(s)?;
    schedule.check_time(t)?;
    if s > t {
        return Err(Error::TimeOutOfRange { t: s, horizon: t });
    }
    Ok(())
}

/// Solves `dM/dsigma = -(K_sigma - I) M` backward from `M(t) = init` and
/// returns `M(s)`. Rows flagged in `absorbing` keep their values.
pub fn integrate_backward<T: Scalar>(
    schedule: &ConductanceSchedule,
    s: f64,
    t: f64,
    init: &DenseMatrix<T>,
    opts: &OdeOptions,
    absorbing: Option<&[bool]>,
) -> Result<DenseMatrix<T>> {
    check_interval(schedule, s, t)?;
    let cols = init.cols();
    let p = pieces(schedule, s, t);
    let deriv = |sigma: f64, x: &[T], out: &mut [T]| {
        let k = generator::<T>(schedule, sigma, absorbing);
        apply_generator(&k, x, cols, out);
    };
    let data = richardson(opts, |h| rk4(&p, true, h, init.as_slice().to_vec(), &deriv))?;
    Ok(DenseMatrix::from_row_major(init.rows(), cols, data))
}

/// Solves the forward equation `dmu/dt = mu (K_t - I)` from `mu(s) = mu0`.
pub fn integrate_forward_row<T: Scalar>(
    schedule: &ConductanceSchedule,
    s: f64,
    t: f64,
    mu0: &[T],
    opts: &OdeOptions,
) -> Result<Vec<T>> {
    check_interval(schedule, s, t)?;
    let p = pieces(schedule, s, t);
    let deriv = |sigma: f64, x: &[T], out: &mut [T]| {
        let k = generator::<T>(schedule, sigma, None);
        apply_generator_left(&k, x, out);
    };
    richardson(opts, |h| rk4(&p, false, h, mu0.to_vec(), &deriv))
}

/// CSRW kernel `K_{s,t}` from the backward equation.
pub fn csrw_kernel<T: Scalar>(schedule: &ConductanceSchedule, s: f64, t: f64, ode_step: f64) -> Result<Kernel<T>> {
    let opts = OdeOptions::with_step(ode_step)?;
    let n = schedule.vertex_count();
    let mut m = integrate_backward(schedule, s, t, &DenseMatrix::<T>::identity(n), &opts, None)?;
    let sums = m.row_sums();
    let drift = sums
        .iter()
        .map(|&r| (r - T::one()).abs().as_f64())
        .fold(0.0, f64::max);
    if drift >= RENORMALIZE_LIMIT {
        return Err(Error::StochasticityDrift { drift });
    }
    if drift > 0.0 {
        for (i, &r) in sums.iter().enumerate() {
            for v in m.row_mut(i) {
                *v /= r;
            }
        }
    }
    let src = schedule.vertex_conductance(s)?.into_iter().map(T::of).collect();
    let tgt = schedule.vertex_conductance(t)?.into_iter().map(T::of).collect();
    Ok(Kernel::new(KernelMatrix::Dense(m), s, t, src, tgt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Graph, Growth, TimeMode};
    use std::sync::Arc;

    #[test]
    fn zero_length_is_identity() {
        let g = Arc::new(Graph::cycle(5).unwrap());
        let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Continuous, 3.0).unwrap();
        let k = csrw_kernel::<f64>(&s, 1.5, 1.5, 0.05).unwrap();
        assert!(k.dense().max_abs_diff(&DenseMatrix::identity(5)) == 0.0);
    }

    #[test]
    fn two_state_closed_form() {
        // K = swap, so K_{s,t}(0,1) = (1 - e^{-2(t-s)}) / 2.
        let g = Arc::new(Graph::path(2).unwrap());
        let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Continuous, 2.0).unwrap();
        let k = csrw_kernel::<f64>(&s, 0.0, 2.0, 0.05).unwrap();
        let want = (1.0 - (-4.0f64).exp()) / 2.0;
        assert!((k.get(0, 1) - want).abs() < 1e-9);
    }

    #[test]
    fn step_discontinuity_is_respected() {
        let g = Arc::new(Graph::cycle(4).unwrap().with_loops().unwrap());
        let growth: Vec<Growth> = g
            .edges()
            .iter()
            .map(|&(a, b)| if a == b { Growth::Step { at: 1.0, factor: 5.0 } } else { Growth::Constant })
            .collect();
        let s = ConductanceSchedule::monotone(g.clone(), vec![1.0; g.edge_count()], growth, TimeMode::Continuous, 2.0)
            .unwrap();
        let whole = csrw_kernel::<f64>(&s, 0.0, 2.0, 0.05).unwrap();
        let a = csrw_kernel::<f64>(&s, 0.0, 1.0, 0.05).unwrap();
        let b = csrw_kernel::<f64>(&s, 1.0, 2.0, 0.05).unwrap();
        assert!(a.then(&b).dense().max_abs_diff(&whole.dense()) < 1e-8);
    }

    #[test]
    fn rejects_large_step() {
        let g = Arc::new(Graph::path(2).unwrap());
        let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Continuous, 2.0).unwrap();
        assert!(csrw_kernel::<f64>(&s, 0.0, 1.0, 0.1).is_err());
    }
}
