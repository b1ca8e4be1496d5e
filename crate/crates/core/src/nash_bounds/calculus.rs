use crate::error::{out_of_range, Error, Result};
use crate::profiles::{NashFunction, PowerPiece};
use serde::Serialize;

/// Relative tolerance of the quadrature path of [`big_f`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Relative precision of the bisection path of [`f_inverse`].
pub const INVERSE_TOLERANCE: f64 = 1e-10;
/// The search window for `F^{-1}` grows by doubling up to this factor of `a`.
pub const INVERSE_WINDOW: f64 = 1e12;

fn piece_integral(p: &PowerPiece, lo: f64, hi: f64) -> f64 {
    if hi <= lo || p.coeff == 0.0 {
        return 0.0;
    }
    if p.coeff.is_infinite() {
        return f64::INFINITY;
    }
    if p.exp == 0.0 {
        p.coeff * (hi / lo).ln()
    } else {
        p.coeff * (hi.powf(p.exp) - lo.powf(p.exp)) / p.exp
    }
}

fn piece_end(pieces: &[PowerPiece], i: usize) -> f64 {
    pieces.get(i + 1).map_or(f64::INFINITY, |q| q.start)
}

/// `F(u; a, N) = int_a^u N(s)/s ds`, in closed form for piecewise powers and
/// by adaptive Simpson in `log s` otherwise.
pub fn big_f(u: f64, a: f64, n: &NashFunction) -> Result<f64> {
    if !(a > 0.0) {
        return Err(out_of_range("a", a, "(0, inf)"));
    }
    if u < a {
        return Err(out_of_range("u", u, "[a, inf)"));
    }
    if u == a {
        return Ok(0.0);
    }
    match n.pieces() {
        Some(pieces) => {
            let mut total = 0.0;
            for (i, p) in pieces.iter().enumerate() {
                let lo = p.start.max(a);
                let hi = piece_end(pieces, i).min(u);
                total += piece_integral(p, lo, hi);
            }
            Ok(total)
        }
        None => {
            let g = |x: f64| n.eval(x.exp());
            simpson(&g, a.ln(), u.ln(), QUADRATURE_TOLERANCE)
        }
    }
}

fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let check = |x: f64| -> Result<f64> {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::IntegrandNotFinite { s: x.exp() })
        }
    };
    let (fa, fb) = (check(a)?, check(b)?);
    let m = 0.5 * (a + b);
    let fm = check(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = recurse(&check, a, b, fa, fm, fb, whole, tol, 48)?;
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm)?, g(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    if depth == 0 || (both - whole).abs() <= 15.0 * tol * both.abs().max(1e-300) {
        return Ok(both + (both - whole) / 15.0);
    }
    Ok(recurse(g, a, m, fa, flm, fm, left, tol, depth - 1)? + recurse(g, m, b, fm, frm, fb, right, tol, depth - 1)?)
}

/// `F^{-1}(target; a, N) = inf{u >= a : F(u; a, N) >= target}`.
pub fn f_inverse(target: f64, a: f64, n: &NashFunction) -> Result<f64> {
    if !(target >= 0.0) {
        return Err(out_of_range("target", target, "[0, inf)"));
    }
    if !(a > 0.0) {
        return Err(out_of_range("a", a, "(0, inf)"));
    }
    if target == 0.0 {
        return Ok(a);
    }
    match n.pieces() {
        Some(pieces) => inverse_piecewise(target, a, pieces),
        None => inverse_bisect(target, a, n),
    }
}

fn inverse_piecewise(target: f64, a: f64, pieces: &[PowerPiece]) -> Result<f64> {
    let mut rem = target;
    let first = pieces.partition_point(|q| q.start <= a).max(1) - 1;
    for (i, p) in pieces.iter().enumerate().skip(first) {
        let lo = p.start.max(a);
        let end = piece_end(pieces, i);
        if p.coeff == 0.0 {
            continue;
        }
        if p.coeff.is_infinite() {
            return Ok(lo);
        }
        let full = piece_integral(p, lo, end);
        if full >= rem {
            let hi = if p.exp == 0.0 {
                lo * (rem / p.coeff).exp()
            } else {
                (lo.powf(p.exp) + p.exp * rem / p.coeff).powf(1.0 / p.exp)
            };
            return Ok(hi.min(end).max(lo));
        }
        rem -= full;
    }
    Err(Error::TargetUnreachable { target, window: f64::INFINITY })
}

fn inverse_bisect(target: f64, a: f64, n: &NashFunction) -> Result<f64> {
    let mut lo = a;
    let mut hi = 2.0 * a;
    while big_f(hi, a, n)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > a * INVERSE_WINDOW {
            return Err(Error::TargetUnreachable { target, window: a * INVERSE_WINDOW });
        }
    }
    while hi - lo > INVERSE_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if big_f(mid, a, n)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `psi(t) = 1 / F^{-1}(t; c_star, N)`.
pub fn psi_uniform(t: f64, c_star: f64, n: &NashFunction) -> Result<f64> {
    Ok(1.0 / f_inverse(t, c_star, n)?)
}

/// Table `psi_n(j)`, `j = 0..=n`, from `1/psi_n(j+1) = F^{-1}(1; 1/psi_n(j), N_{n-j})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSolution {
    pub n: usize,
    pub values: Vec<f64>,
    pub seed: f64,
}

impl PsiSolution {
    pub fn at(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// `profiles[k - 1]` bounds the Nash profile of step `k`; a single profile
/// is used for every step.
pub fn psi_recursion(profiles: &[NashFunction], n: usize, seed: f64) -> Result<PsiSolution> {
    if profiles.is_empty() {
        return Err(Error::InvalidConfig("psi recursion needs at least one profile".into()));
    }
    if profiles.len() != 1 && profiles.len() < n {
        return Err(Error::InvalidConfig(format!("{} profiles for {n} steps", profiles.len())));
    }
    if !(seed > 0.0) || seed.is_infinite() {
        return Err(out_of_range("psi seed", seed, "(0, inf)"));
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(seed);
    for j in 0..n {
        let k = n - j;
        let prof = if profiles.len() == 1 { &profiles[0] } else { &profiles[k - 1] };
        let u = f_inverse(1.0, 1.0 / values[j], prof)?;
        values.push(1.0 / u);
    }
    Ok(PsiSolution { n, values, seed })
}
