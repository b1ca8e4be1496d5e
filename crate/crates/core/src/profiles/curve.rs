use crate::error::{Error, Result};
use crate::kernels::fmt_real;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Lambda,
    Phi,
    NashLower,
    NashUpper,
    NashTarget,
}

impl ProfileKind {
    /// Profiles in `u` decrease; Nash curves in `s` increase.
    pub fn is_increasing(self) -> bool {
        matches!(self, ProfileKind::NashLower | ProfileKind::NashUpper | ProfileKind::NashTarget)
    }
}

/// Sampled profile `(argument, value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub kind: ProfileKind,
    pub points: Vec<(f64, f64)>,
    /// False when the values come from heuristic candidate sets.
    pub exact: bool,
}

impl ProfileCurve {
    pub fn new(kind: ProfileKind, points: Vec<(f64, f64)>, exact: bool) -> Self {
        ProfileCurve { kind, points, exact }
    }

    /// Whether the values are monotone in the direction `kind` requires.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            let (a, b) = (w[0].1, w[1].1);
            if self.kind.is_increasing() {
                b >= a * (1.0 - 1e-12)
            } else {
                b <= a * (1.0 + 1e-12) || (a.is_infinite() && b.is_infinite())
            }
        })
    }

    /// `arg,value,kind,exact_flag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("arg,value,kind,exact_flag\n");
        for &(a, v) in &self.points {
            let _ = writeln!(s, "{},{},{:?},{}", fmt_real(a), fmt_real(v), self.kind, self.exact);
        }
        s
    }
}

/// `N(s) = coeff * s^exp` from `start` until the next piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPiece {
    pub start: f64,
    pub coeff: f64,
    pub exp: f64,
}

/// A Nash-type profile `N`, either piecewise power (with closed-form
/// integrals) or an arbitrary nondecreasing function.
#[derive(Clone)]
pub enum NashFunction {
    /// Pieces sorted by `start`; the first starts at 0.
    Piecewise(Vec<PowerPiece>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for NashFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NashFunction::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            NashFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl NashFunction {
    pub fn power(coeff: f64, exp: f64) -> Self {
        NashFunction::Piecewise(vec![PowerPiece { start: 0.0, coeff, exp }])
    }

    pub fn constant(c: f64) -> Self {
        Self::power(c, 0.0)
    }

    pub fn piecewise(mut pieces: Vec<PowerPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidConfig("empty piecewise profile".into()));
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        if pieces[0].start != 0.0 {
            return Err(Error::InvalidConfig("first profile piece must start at 0".into()));
        }
        if pieces.iter().any(|p| p.coeff < 0.0 || p.coeff.is_nan()) {
            return Err(Error::InvalidConfig("profile coefficients must be nonnegative".into()));
        }
        Ok(NashFunction::Piecewise(pieces))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            NashFunction::Piecewise(p) => {
                let k = p.partition_point(|q| q.start <= s).max(1) - 1;
                piece_value(&p[k], s)
            }
            NashFunction::Custom(f) => f(s),
        }
    }

    /// Pieces when the closed-form path applies.
    pub fn pieces(&self) -> Option<&[PowerPiece]> {
        match self {
            NashFunction::Piecewise(p) => Some(p),
            NashFunction::Custom(_) => None,
        }
    }

    /// `s -> scale * N(s)`.
    pub fn scaled(&self, scale: f64) -> Self {
        match self {
            NashFunction::Piecewise(p) => NashFunction::Piecewise(
                p.iter()
                    .map(|q| PowerPiece {
                        coeff: if q.coeff == 0.0 { 0.0 } else { q.coeff * scale },
                        ..*q
                    })
                    .collect(),
            ),
            NashFunction::Custom(f) => {
                let f = f.clone();
                NashFunction::Custom(Arc::new(move |s| scale * f(s)))
            }
        }
    }

    pub fn sample(&self, kind: ProfileKind, args: &[f64], exact: bool) -> ProfileCurve {
        ProfileCurve::new(kind, args.iter().map(|&s| (s, self.eval(s))).collect(), exact)
    }
}

fn piece_value(p: &PowerPiece, s: f64) -> f64 {
    if p.coeff == 0.0 {
        0.0
    } else if p.exp == 0.0 {
        p.coeff
    } else {
        p.coeff * s.powf(p.exp)
    }
}
