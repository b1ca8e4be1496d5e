use super::curve::{NashFunction, PowerPiece, ProfileCurve, ProfileKind};
use super::spectral::{dirichlet_eigenpair, Profiles};
use crate::error::{out_of_range, Error, Result};
use crate::geometry::{GrowthProfile, VolumeFunction};
use crate::kernels::{dirichlet_form, l1_norm, l2_norm_sq, path_rng};
use crate::linalg::DenseMatrix;
use rand::Rng;
use serde::Serialize;

/// Default number of random test functions in the sampled refinement.
pub const NASH_SAMPLES: usize = 10_000;

/// `1/Lambda(s) <= N(s) <= 2/Lambda(4s)` with a sampled value of the sup
/// defining `N(s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashSandwich {
    pub s: f64,
    pub lower: f64,
    pub upper: f64,
    /// Largest `||f||_2^2 / E(f, f)` over sampled feasible `f`.
    pub sampled: f64,
    pub samples: usize,
    pub exact: bool,
}

impl NashSandwich {
    pub fn sampled_in_sandwich(&self) -> bool {
        self.sampled >= self.lower * (1.0 - 1e-9) && self.sampled <= self.upper * (1.0 + 1e-9)
    }
}

impl Profiles {
    /// `1 / Lambda(s)`, zero when no set fits.
    pub fn nash_lower(&self, s: f64) -> f64 {
        1.0 / self.spectral_or_inf(s)
    }

    /// `2 / Lambda(4s)`, zero when no set fits and `+inf` once `Lambda` vanishes.
    pub fn nash_upper(&self, s: f64) -> f64 {
        2.0 / self.spectral_or_inf(4.0 * s)
    }

    /// The upper sandwich `s -> 2 / Lambda(4s)` as a step function.
    pub fn nash_upper_function(&self) -> NashFunction {
        let mut pieces = vec![PowerPiece { start: 0.0, coeff: 0.0, exp: 0.0 }];
        for m in self.breakpoints() {
            let l = self.spectral_or_inf(m);
            pieces.push(PowerPiece { start: m / 4.0, coeff: 2.0 / l, exp: 0.0 });
        }
        NashFunction::Piecewise(pieces)
    }

    pub fn lambda_curve(&self, us: &[f64]) -> ProfileCurve {
        let pts = us.iter().map(|&u| (u, self.spectral_or_inf(u))).collect();
        ProfileCurve::new(ProfileKind::Lambda, pts, self.is_exact())
    }

    pub fn phi_curve(&self, us: &[f64]) -> ProfileCurve {
        let pts = us
            .iter()
            .map(|&u| (u, self.conductance(u).unwrap_or(f64::INFINITY)))
            .collect();
        ProfileCurve::new(ProfileKind::Phi, pts, self.is_exact())
    }

    pub fn nash_curves(&self, ss: &[f64]) -> (ProfileCurve, ProfileCurve) {
        let lower = ss.iter().map(|&s| (s, self.nash_lower(s))).collect();
        let upper = ss.iter().map(|&s| (s, self.nash_upper(s))).collect();
        (
            ProfileCurve::new(ProfileKind::NashLower, lower, self.is_exact()),
            ProfileCurve::new(ProfileKind::NashUpper, upper, self.is_exact()),
        )
    }
}

fn rayleigh_inverse(q: &DenseMatrix<f64>, pi: &[f64], f: &[f64]) -> f64 {
    let e = dirichlet_form(q, pi, f);
    let n2 = l2_norm_sq(f, pi);
    if n2 == 0.0 {
        return 0.0;
    }
    if e <= 0.0 {
        return f64::INFINITY;
    }
    n2 / e
}

fn feasible(f: &[f64], pi: &[f64], s: f64) -> bool {
    let l1 = l1_norm(f, pi);
    l1 * l1 <= s * l2_norm_sq(f, pi) * (1.0 + 1e-12)
}

/// Sandwich for the Nash profile of `Q` at `s`, with the sup sampled over
/// `samples` random feasible functions. The first candidate is the Dirichlet
/// eigenvector of the set attaining `Lambda(s)`, which attains the lower end.
pub fn nash_profile_bounds(
    profiles: &Profiles,
    q: &DenseMatrix<f64>,
    pi: &[f64],
    s: f64,
    samples: usize,
    seed: u64,
) -> Result<NashSandwich> {
    if !(s > 0.0) {
        return Err(out_of_range("s", s, "(0, inf)"));
    }
    let n = q.rows();
    let mut best: f64 = 0.0;
    let mut base = vec![0.0; n];
    let mut support: Vec<usize> = (0..n).collect();
    if let Some(omega) = profiles.spectral_minimizer(s) {
        let (_, v) = dirichlet_eigenpair(q, pi, &omega);
        for (&x, &c) in omega.iter().zip(&v) {
            base[x] = c.abs();
        }
        if feasible(&base, pi, s) {
            best = best.max(rayleigh_inverse(q, pi, &base));
        }
        support = omega;
    }
    let mut rng = path_rng(seed, 0);
    for i in 0..samples {
        let f: Vec<f64> = if i % 2 == 0 && best > 0.0 {
            // Multiplicative jitter of the seed function.
            base.iter().map(|&b| b * (1.0 + 0.5 * (rng.random::<f64>() - 0.5))).collect()
        } else {
            // Random nonnegative values on a random subset of the candidate
            // support, or anywhere when no set fits.
            let pool = if rng.random::<bool>() { &support } else { &(0..n).collect() };
            let k = rng.random_range(1..=pool.len().max(1));
            let mut f = vec![0.0; n];
            for _ in 0..k {
                let x = pool[rng.random_range(0..pool.len())];
                f[x] = rng.random::<f64>();
            }
            f
        };
        if feasible(&f, pi, s) {
            best = best.max(rayleigh_inverse(q, pi, &f));
        }
    }
    Ok(NashSandwich {
        s,
        lower: profiles.nash_lower(s),
        upper: profiles.nash_upper(s),
        sampled: best,
        samples,
        exact: profiles.is_exact(),
    })
}

/// Outcome of `inf_{s >= s0} N(c_n s) / N(s) >= 2` on sampled `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityCheck {
    pub s0: f64,
    pub c_n: f64,
    pub min_ratio: f64,
    pub witness: f64,
    pub pass: bool,
}

impl RegularityCheck {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::RegularityFailed { s: self.witness, ratio: self.min_ratio })
        }
    }
}

pub fn regularity_check(n: &NashFunction, c_n: f64, s0: f64, samples: &[f64]) -> RegularityCheck {
    let mut rep = RegularityCheck { s0, c_n, min_ratio: f64::INFINITY, witness: s0, pass: true };
    for &s in samples.iter().filter(|&&s| s >= s0) {
        let (a, b) = (n.eval(c_n * s), n.eval(s));
        let r = if b == 0.0 { f64::INFINITY } else { a / b };
        if r < rep.min_ratio {
            rep.min_ratio = r;
            rep.witness = s;
        }
    }
    rep.pass = rep.min_ratio >= 2.0;
    rep
}

/// `N(s) = C (v^{-1}(C s))^2 / alpha_l` built from a growth profile, sampled
/// on `samples`, with the regularity check at `C_n = C_v`.
#[derive(Debug, Clone)]
pub struct VolumeNash {
    pub function: NashFunction,
    pub curve: ProfileCurve,
    pub regularity: RegularityCheck,
}

pub fn nash_from_volume(
    v: &GrowthProfile,
    c: f64,
    alpha_l: f64,
    s0: f64,
    samples: &[f64],
) -> Result<VolumeNash> {
    if !(c > 0.0) {
        return Err(out_of_range("C", c, "(0, inf)"));
    }
    if !(alpha_l > 0.0) {
        return Err(out_of_range("alpha_l", alpha_l, "(0, 1]"));
    }
    v.v.validate()?;
    let scale = c / alpha_l;
    let pieces = match &v.v {
        // v^{-1}(Cs) = max(1, (Cs)^{1/d}).
        VolumeFunction::Power { degree } => vec![
            PowerPiece { start: 0.0, coeff: scale, exp: 0.0 },
            PowerPiece { start: 1.0 / c, coeff: scale * c.powf(2.0 / degree), exp: 2.0 / degree },
        ],
        // v^{-1}(Cs) steps to the first tabulated radius with v >= Cs; the
        // pieces are left-closed, so values at exact breakpoints round up.
        VolumeFunction::Table { radii, values } => {
            let mut p = vec![PowerPiece { start: 0.0, coeff: scale, exp: 0.0 }];
            let mut lo = 1.0f64;
            for (&r, &val) in radii.iter().zip(values) {
                if r >= 1.0 && val > lo {
                    p.push(PowerPiece { start: lo / c, coeff: scale * r * r, exp: 0.0 });
                    lo = val;
                }
            }
            p.push(PowerPiece { start: lo / c, coeff: f64::INFINITY, exp: 0.0 });
            p
        }
    };
    let function = NashFunction::piecewise(pieces)?;
    let curve = function.sample(ProfileKind::NashTarget, samples, true);
    let regularity = regularity_check(&function, v.c_v, s0, samples);
    Ok(VolumeNash { function, curve, regularity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::ProfileMode;

    fn growth(degree: f64) -> GrowthProfile {
        GrowthProfile { v: VolumeFunction::Power { degree }, c_v: 4.0, c_d: 2.0, witness: (0.0, 0, 0.0) }
    }

    #[test]
    fn volume_powers() {
        let samples = [2.0, 4.0, 8.0, 16.0];
        let one = nash_from_volume(&growth(1.0), 1.0, 1.0, 1.0, &samples).unwrap();
        for &s in &samples {
            assert!((one.function.eval(s) - s * s).abs() < 1e-9);
        }
        let two = nash_from_volume(&growth(2.0), 1.0, 1.0, 1.0, &samples).unwrap();
        for &s in &samples {
            assert!((two.function.eval(s) - s).abs() < 1e-9);
        }
        assert!(one.curve.is_monotone() && two.regularity.pass);
    }

    #[test]
    fn table_volume_matches_inverse() {
        let v = VolumeFunction::Table { radii: vec![1.0, 2.0, 3.0, 4.0], values: vec![3.0, 5.0, 7.0, 9.0] };
        let g = GrowthProfile { v: v.clone(), c_v: 2.0, c_d: 2.0, witness: (0.0, 0, 0.0) };
        let c = 1.5;
        let vn = nash_from_volume(&g, c, 0.5, 0.1, &[0.1]).unwrap();
        for k in 1..60 {
            let s = k as f64 * 0.1 + 0.013;
            let r = v.inverse(c * s);
            let want = c * r * r / 0.5;
            let got = vn.function.eval(s);
            assert!((got - want).abs() <= 1e-9 * want.max(1.0) || (got.is_infinite() && want.is_infinite()), "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn upper_function_matches_pointwise() {
        let n = 6;
        let mut q = DenseMatrix::zeros(n, n);
        for i in 0..n {
            q[(i, i)] = 0.5;
            q[(i, (i + 1) % n)] += 0.25;
            q[(i, (i + n - 1) % n)] += 0.25;
        }
        let pi = vec![1.0; n];
        let p = Profiles::compute(&q, &pi, ProfileMode::Exact).unwrap();
        let f = p.nash_upper_function();
        for k in 0..40 {
            let s = k as f64 * 0.05 + 0.01;
            assert_eq!(f.eval(s), p.nash_upper(s), "s = {s}");
        }
    }
}
