use crate::error::{out_of_range, Error, Result};
use crate::graphs::ConductanceSchedule;
use crate::kernels::step_csr;
use crate::linalg::{generalized_max_eigen, generalized_power_iteration, DenseMatrix};
use rayon::prelude::*;
use serde::Serialize;

/// Outer balls up to this size use the dense pencil solve.
pub const DENSE_PENCIL_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareResult {
    pub constant: f64,
    pub t: f64,
    pub center: usize,
    pub radius: f64,
    pub inner_size: usize,
    pub outer_size: usize,
    /// Maximizing function on the outer ball, keyed like `outer_members`.
    pub maximizer: Vec<f64>,
    pub outer_members: Vec<usize>,
    pub method: &'static str,
}

/// Variance form on the inner ball and energy form on the outer ball, both
/// expressed on the outer ball's members.
pub(crate) struct PoincareForms {
    pub outer: Vec<usize>,
    pub variance: DenseMatrix<f64>,
    pub energy: DenseMatrix<f64>,
}

pub(crate) fn poincare_forms(schedule: &ConductanceSchedule, t: f64, x0: usize, r: f64) -> Result<PoincareForms> {
    let g = schedule.graph();
    if !(r > 0.0) {
        return Err(out_of_range("radius", r, "(0, inf)"));
    }
    if x0 >= g.vertex_count() {
        return Err(out_of_range("center", x0 as f64, "a vertex"));
    }
    if g.is_truncated() && g.boundary_distance(x0) as f64 <= 2.0 * r {
        return Err(Error::RadiusExceedsGuard {
            radius: r,
            reason: "B(x0, 2r) reaches the truncation boundary".into(),
        });
    }
    let pi = schedule.vertex_conductance(t)?;
    let k = step_csr::<f64>(schedule, t);
    let outer = g.ball(x0, 2.0 * r).members;
    let m = outer.len();
    let mut pos = vec![usize::MAX; g.vertex_count()];
    for (i, &x) in outer.iter().enumerate() {
        pos[x] = i;
    }
    let inner: Vec<bool> = outer.iter().map(|&x| g.distance(x0, x) as f64 <= r).collect();
    let mass: f64 = outer.iter().zip(&inner).filter(|(_, &b)| b).map(|(&x, _)| pi[x]).sum();
    let variance = DenseMatrix::from_fn(m, m, |i, j| {
        if !(inner[i] && inner[j]) {
            return 0.0;
        }
        let (pa, pb) = (pi[outer[i]], pi[outer[j]]);
        let diag = if i == j { pa } else { 0.0 };
        diag - pa * pb / mass
    });
    // sum_{x,y in B(2r)} (f(x) - f(y))^2 K(x,y) pi(x) = f^T [2 (D - W)] f.
    let mut energy = DenseMatrix::zeros(m, m);
    for (i, &x) in outer.iter().enumerate() {
        for (y, kv) in k.row(x) {
            let j = pos[y];
            if j == usize::MAX || j == i {
                continue;
            }
            let w = pi[x] * kv;
            energy[(i, i)] += w;
            energy[(j, j)] += w;
            energy[(i, j)] -= w;
            energy[(j, i)] -= w;
        }
    }
    Ok(PoincareForms {
        outer,
        variance: variance.symmetrized(),
        energy,
    })
}

/// Smallest `C_P` for one ball: the top eigenvalue of the pencil
/// (inner variance form, `r^2` times outer energy form), with `f` pinned to
/// zero at the last outer vertex to remove constants.
pub fn poincare_constant(schedule: &ConductanceSchedule, t: f64, x0: usize, r: f64) -> Result<PoincareResult> {
    let forms = poincare_forms(schedule, t, x0, r)?;
    let m = forms.outer.len();
    let inner_size = schedule.graph().ball(x0, r).members.len();
    let mut result = PoincareResult {
        constant: 0.0,
        t,
        center: x0,
        radius: r,
        inner_size,
        outer_size: m,
        maximizer: vec![0.0; m],
        outer_members: forms.outer.clone(),
        method: "dense",
    };
    if m <= 1 {
        return Ok(result);
    }
    let keep: Vec<usize> = (0..m - 1).collect();
    let a = forms.variance.submatrix(&keep, &keep);
    let mut b = forms.energy.submatrix(&keep, &keep);
    b.scale(r * r);
    let solved = if m - 1 <= DENSE_PENCIL_LIMIT {
        generalized_max_eigen(&a, &b)
    } else {
        result.method = "power";
        generalized_power_iteration(&a, &b, 1e-10, 20_000)
    };
    let (lambda, v) = solved.ok_or(Error::SingularEnergyForm { center: x0 })?;
    result.constant = lambda.max(0.0);
    result.maximizer[..m - 1].copy_from_slice(&v);
    Ok(result)
}

/// `sup` of [`poincare_constant`] over grid times, centers and radii.
pub fn uniform_poincare_constant(
    schedule: &ConductanceSchedule,
    grid: &[f64],
    centers: &[usize],
    radii: &[f64],
) -> Result<PoincareResult> {
    let jobs: Vec<(f64, usize, f64)> = grid
        .iter()
        .flat_map(|&t| centers.iter().flat_map(move |&x| radii.iter().map(move |&r| (t, x, r))))
        .collect();
    let results: Vec<Result<PoincareResult>> = jobs
        .par_iter()
        .map(|&(t, x, r)| poincare_constant(schedule, t, x, r))
        .collect();
    let mut best: Option<PoincareResult> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.constant > b.constant) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty Poincaré catalog".into()))
}

/// Both sides of the weighted Poincaré inequality for one `f >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedPoincareCheck {
    /// `r^2 <(eta_wedge K) |grad f|^2>_pi`, without the constant.
    pub weighted_energy: f64,
    /// `pi(H_f) / pi(B) <eta f^2>_pi`.
    pub rhs: f64,
    /// `C'_P r^2 <(eta_wedge K) |grad f|^2>_pi`.
    pub lhs: f64,
    /// Smallest constant for which this `f` passes.
    pub needed: f64,
    pub pass: bool,
}

/// `eta(x) = ([1 - d(x, z) / (2r)]_+)^2`.
pub fn cutoff(schedule: &ConductanceSchedule, z: usize, r: f64) -> Vec<f64> {
    let g = schedule.graph();
    (0..g.vertex_count())
        .map(|x| (1.0 - g.distance(x, z) as f64 / (2.0 * r)).max(0.0).powi(2))
        .collect()
}

pub fn weighted_poincare_check(
    schedule: &ConductanceSchedule,
    t: f64,
    z: usize,
    r: f64,
    f: &[f64],
    c_p_prime: f64,
) -> Result<WeightedPoincareCheck> {
    let g = schedule.graph();
    if f.len() != g.vertex_count() {
        return Err(Error::InvalidConfig("f length != vertex count".into()));
    }
    if !(r > 0.0) {
        return Err(out_of_range("radius", r, "(0, inf)"));
    }
    let pi = schedule.vertex_conductance(t)?;
    let k = step_csr::<f64>(schedule, t);
    let eta = cutoff(schedule, z, r);
    let mut energy = 0.0;
    for x in 0..g.vertex_count() {
        for (y, kv) in k.row(x) {
            let d = f[y] - f[x];
            energy += eta[x].min(eta[y]) * kv * d * d * pi[x];
        }
    }
    let weighted_energy = r * r * energy;
    let ball_mass: f64 = g.ball(z, 2.0 * r).members.iter().map(|&x| pi[x]).sum();
    let zero_mass: f64 = g
        .ball(z, r)
        .members
        .iter()
        .filter(|&&x| f[x] == 0.0)
        .map(|&x| pi[x])
        .sum();
    let eta_f2: f64 = (0..g.vertex_count()).map(|x| eta[x] * f[x] * f[x] * pi[x]).sum();
    let rhs = zero_mass / ball_mass * eta_f2;
    let lhs = c_p_prime * weighted_energy;
    let needed = if rhs == 0.0 {
        0.0
    } else if weighted_energy == 0.0 {
        f64::INFINITY
    } else {
        rhs / weighted_energy
    };
    Ok(WeightedPoincareCheck {
        weighted_energy,
        rhs,
        lhs,
        needed,
        pass: lhs >= rhs * (1.0 - 1e-12),
    })
}

/// Smallest `C'_P` making every function in `family` pass.
pub fn fit_weighted_poincare(
    schedule: &ConductanceSchedule,
    t: f64,
    z: usize,
    r: f64,
    family: &[Vec<f64>],
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for f in family {
        c = c.max(weighted_poincare_check(schedule, t, z, r, f, 0.0)?.needed);
    }
    Ok(c)
}
