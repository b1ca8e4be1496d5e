use crate::error::{out_of_range, Error, Result};
use crate::graphs::{ConductanceSchedule, Graph, TimeMode};
use crate::kernels::{integrate_backward, one_step_kernel, step_csr, OdeOptions};
use crate::linalg::DenseMatrix;
use serde::Serialize;

/// Grid spacing of continuous-time cylinder solutions.
pub const CYLINDER_GRID_STEP: f64 = 1.0 / 16.0;
/// Residual tolerance of discrete solutions, relative to `max(1, sup |u|)`.
pub const DISCRETE_RESIDUAL_TOL: f64 = 1e-12;
/// Residual tolerance of continuous solutions (integral form, Boole's rule).
pub const CONTINUOUS_RESIDUAL_TOL: f64 = 1e-7;
/// Continuous solutions count as nonnegative down to this value.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// `Q(t1, t2; z, R) = [t1, t2] x B(z, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cylinder {
    pub t1: f64,
    pub t2: f64,
    pub z: usize,
    pub radius: f64,
}

impl Cylinder {
    pub fn new(t1: f64, t2: f64, z: usize, radius: f64) -> Result<Self> {
        if !(t1 >= 0.0 && t1 <= t2) {
            return Err(out_of_range("t1", t1, &format!("[0, {t2}]")));
        }
        if !(radius >= 1.0) {
            return Err(out_of_range("R", radius, "[1, inf)"));
        }
        Ok(Self { t1, t2, z, radius })
    }

    pub fn ball(&self, g: &Graph) -> Vec<usize> {
        g.ball(self.z, self.radius).members
    }

    /// Ball vertices whose neighbours all lie in the ball; the heat equation
    /// is imposed there and lateral data everywhere else.
    pub fn interior(&self, g: &Graph) -> Vec<bool> {
        let mut inside = vec![false; g.vertex_count()];
        for x in self.ball(g) {
            inside[x] = true;
        }
        (0..g.vertex_count())
            .map(|x| inside[x] && g.incident(x).iter().all(|&(y, _)| inside[y]))
            .collect()
    }

    /// True when `[a, b] x B(c, r)` lies inside this cylinder.
    pub fn contains(&self, g: &Graph, a: f64, b: f64, c: usize, r: f64) -> bool {
        const EPS: f64 = 1e-9;
        a >= self.t1 - EPS
            && b <= self.t2 + EPS
            && g.ball(c, r).members.iter().all(|&x| (g.distance(self.z, x) as f64) <= self.radius)
    }

    fn guard(&self, g: &Graph) -> Result<()> {
        if self.z >= g.vertex_count() {
            return Err(Error::InvalidConfig(format!("center {} is not a vertex", self.z)));
        }
        if g.is_truncated() && (g.boundary_distance(self.z) as f64) <= self.radius {
            return Err(Error::CylinderExceedsGraph { center: self.z, radius: self.radius as usize });
        }
        Ok(())
    }
}

/// Values held outside the interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Lateral {
    Zero,
    Constant(f64),
    /// Time-independent values per vertex.
    Fixed(Vec<f64>),
}

impl Lateral {
    fn value(&self, x: usize) -> f64 {
        match self {
            Lateral::Zero => 0.0,
            Lateral::Constant(c) => *c,
            Lateral::Fixed(v) => v[x],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Lateral::Zero => Ok(()),
            Lateral::Constant(c) if *c < 0.0 => Err(Error::NegativeBoundaryData { vertex: 0, value: *c }),
            Lateral::Constant(_) => Ok(()),
            Lateral::Fixed(v) => {
                if v.len() != n {
                    return Err(Error::InvalidConfig("lateral data length != vertex count".into()));
                }
                match v.iter().position(|&a| a < 0.0) {
                    Some(x) => Err(Error::NegativeBoundaryData { vertex: x, value: v[x] }),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Time grid on `[t1, t2]`: every integer for discrete schedules. In
/// continuous time the interval is cut at schedule breakpoints and `extra`
/// times, and each piece gets a multiple of four equal steps of at most
/// `step`. Returns the grid and the indices of the cuts.
pub(crate) fn time_grid(
    schedule: &ConductanceSchedule,
    t1: f64,
    t2: f64,
    extra: &[f64],
    step: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    schedule.check_time(t1)?;
    schedule.check_time(t2)?;
    match schedule.time_mode() {
        TimeMode::Discrete => {
            if t1.fract() != 0.0 || t2.fract() != 0.0 {
                return Err(out_of_range("discrete cylinder time", if t1.fract() != 0.0 { t1 } else { t2 }, "integers"));
            }
            let grid: Vec<f64> = (t1 as usize..=t2 as usize).map(|k| k as f64).collect();
            let cuts = (0..grid.len()).collect();
            Ok((grid, cuts))
        }
        TimeMode::Continuous => {
            let mut cuts: Vec<f64> = vec![t1, t2];
            cuts.extend(schedule.breakpoints().into_iter().filter(|&b| b > t1 && b < t2));
            cuts.extend(extra.iter().copied().filter(|&b| b > t1 && b < t2));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let mut grid = vec![t1];
            let mut idx = vec![0];
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let m = 4 * ((b - a) / (4.0 * step)).ceil().max(1.0) as usize;
                let h = (b - a) / m as f64;
                for j in 1..=m {
                    grid.push(if j == m { b } else { a + j as f64 * h });
                }
                idx.push(grid.len() - 1);
            }
            Ok((grid, idx))
        }
    }
}

/// `u_i = K-step(u_{i+1})` backward along `grid`, rows flagged `absorbing`
/// held fixed. Returns one matrix per grid time.
pub(crate) fn backward_trace(
    schedule: &ConductanceSchedule,
    grid: &[f64],
    init: DenseMatrix<f64>,
    absorbing: Option<&[bool]>,
) -> Result<Vec<DenseMatrix<f64>>> {
    let mut out = vec![init];
    let opts = OdeOptions::default();
    for w in grid.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        let prev = out.last().unwrap();
        let next = match schedule.time_mode() {
            TimeMode::Discrete => {
                let mut m = step_csr::<f64>(schedule, b).mul_dense(prev);
                if let Some(mask) = absorbing {
                    for (x, _) in mask.iter().enumerate().filter(|(_, &f)| f) {
                        m.row_mut(x).copy_from_slice(prev.row(x));
                    }
                }
                m
            }
            TimeMode::Continuous => integrate_backward(schedule, a, b, prev, &opts, absorbing)?,
        };
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// A (sub-/super-)solution sampled on a time grid, full vertex vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderSolution {
    pub cylinder: Cylinder,
    pub mode: TimeMode,
    /// Ascending, from `t1` to `t2`.
    pub times: Vec<f64>,
    /// `values[i][x] = u(times[i], x)`.
    pub values: Vec<Vec<f64>>,
    /// Grid indices where continuous pieces start and end.
    pub cuts: Vec<usize>,
    pub ball: Vec<usize>,
    pub interior: Vec<bool>,
    pub nonnegative: bool,
}

impl CylinderSolution {
    /// Grid index of time `s`.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let i = self.times.partition_point(|&t| t < s - 1e-9);
        (i < self.times.len() && (self.times[i] - s).abs() <= 1e-9).then_some(i)
    }

    pub fn at(&self, s: f64) -> Option<&[f64]> {
        self.index_of(s).map(|i| self.values[i].as_slice())
    }

    /// `sup |u|` over the cylinder.
    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| self.ball.iter().map(move |&x| v[x].abs()))
            .fold(0.0, f64::max)
    }

    /// `Phi(u)` pointwise, e.g. a convex image.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<Vec<f64>> = self.values.iter().map(|v| v.iter().map(|&a| f(a)).collect()).collect();
        let nonnegative = values.iter().flatten().all(|&a| a >= -POSITIVITY_TOL);
        Self { values, nonnegative, ..self.clone() }
    }

    /// Signed defects `lhs - rhs` of the backward equation at interior points,
    /// as `(s, x, defect)`. Discrete: `u(s-1,x) - sum_y K_s(x,y) u(s,y)`.
    /// Continuous: `u(a,x) - u(b,x) - int_a^b (K u - u)(x)` over windows of
    /// four grid steps, by Boole's rule.
    pub fn defects(&self, schedule: &ConductanceSchedule) -> Result<Vec<(f64, usize, f64)>> {
        let interior: Vec<usize> = (0..self.interior.len()).filter(|&x| self.interior[x]).collect();
        let mut out = Vec::new();
        match self.mode {
            TimeMode::Discrete => {
                for i in 1..self.times.len() {
                    let k = one_step_kernel::<f64>(schedule, self.times[i])?.dense();
                    let next = k.mul_vec(&self.values[i]);
                    for &x in &interior {
                        out.push((self.times[i - 1], x, self.values[i - 1][x] - next[x]));
                    }
                }
            }
            TimeMode::Continuous => {
                for w in self.cuts.windows(2) {
                    let (p0, p1) = (w[0], w[1]);
                    let (a, b) = (self.times[p0], self.times[p1]);
                    let eps = 1e-9 * (b - a);
                    let gen: Vec<Vec<f64>> = (p0..=p1)
                        .map(|i| {
                            let k = one_step_kernel::<f64>(schedule, self.times[i].clamp(a + eps, b - eps))?.dense();
                            let ku = k.mul_vec(&self.values[i]);
                            Ok(ku.iter().zip(&self.values[i]).map(|(p, q)| p - q).collect())
                        })
                        .collect::<Result<_>>()?;
                    let mut i = p0;
                    while i + 4 <= p1 {
                        let h = (self.times[i + 4] - self.times[i]) / 4.0;
                        let g = |j: usize, x: usize| gen[i + j - p0][x];
                        for &x in &interior {
                            let integral =
                                2.0 * h / 45.0 * (7.0 * g(0, x) + 32.0 * g(1, x) + 12.0 * g(2, x) + 32.0 * g(3, x) + 7.0 * g(4, x));
                            let lhs = self.values[i][x] - self.values[i + 4][x];
                            out.push((self.times[i], x, lhs - integral));
                        }
                        i += 4;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest `|defect|` relative to `max(1, sup |u|)`.
    pub fn residual(&self, schedule: &ConductanceSchedule) -> Result<f64> {
        let scale = self.sup().max(1.0);
        Ok(self.defects(schedule)?.iter().map(|d| d.2.abs()).fold(0.0, f64::max) / scale)
    }

    pub fn residual_tolerance(&self) -> f64 {
        match self.mode {
            TimeMode::Discrete => DISCRETE_RESIDUAL_TOL,
            TimeMode::Continuous => CONTINUOUS_RESIDUAL_TOL,
        }
    }

    /// Errors with the worst point unless `partial_{-s} u <= K u - u` holds
    /// at every interior point, up to the residual tolerance.
    pub fn verify_subsolution(&self, schedule: &ConductanceSchedule) -> Result<f64> {
        let scale = self.sup().max(1.0);
        let worst = self
            .defects(schedule)?
            .into_iter()
            .fold((0.0, 0, f64::NEG_INFINITY), |acc, d| if d.2 > acc.2 { d } else { acc });
        if worst.2 > self.residual_tolerance() * scale {
            return Err(Error::NotASubsolution { s: worst.0, x: worst.1, excess: worst.2 });
        }
        if let Some((i, x)) = self.negative_point() {
            return Err(Error::NotASubsolution { s: self.times[i], x, excess: self.values[i][x] });
        }
        Ok(worst.2.max(0.0))
    }

    fn negative_point(&self) -> Option<(usize, usize)> {
        for (i, v) in self.values.iter().enumerate() {
            if let Some(&x) = self.ball.iter().find(|&&x| v[x] < -POSITIVITY_TOL) {
                return Some((i, x));
            }
        }
        None
    }

    /// Quadrature weights in time: one per integer time in discrete mode,
    /// trapezoid weights on the grid otherwise. Restricted to `[a, b]`.
    pub fn time_weights(&self, a: f64, b: f64) -> Vec<(usize, f64)> {
        let idx: Vec<usize> = (0..self.times.len())
            .filter(|&i| self.times[i] >= a - 1e-9 && self.times[i] <= b + 1e-9)
            .collect();
        match self.mode {
            TimeMode::Discrete => idx.into_iter().map(|i| (i, 1.0)).collect(),
            TimeMode::Continuous => {
                let mut w: Vec<(usize, f64)> = idx.iter().map(|&i| (i, 0.0)).collect();
                for j in 1..idx.len() {
                    let h = self.times[idx[j]] - self.times[idx[j - 1]];
                    w[j - 1].1 += h / 2.0;
                    w[j].1 += h / 2.0;
                }
                w
            }
        }
    }
}

/// Solves the backward heat equation on `cyl` for each terminal vector at
/// once. Terminal data is read on the ball; lateral data is imposed off the
/// interior for `s < t2`. In continuous time the boundary layer carries the
/// lateral data at `t2` as well. `extra` adds continuous grid times.
pub fn solve_cylinder_family(
    schedule: &ConductanceSchedule,
    cyl: &Cylinder,
    terminals: &[Vec<f64>],
    lateral: &Lateral,
    extra: &[f64],
) -> Result<Vec<CylinderSolution>> {
    let g = schedule.graph();
    let n = g.vertex_count();
    cyl.guard(g)?;
    lateral.validate(n)?;
    let ball = cyl.ball(g);
    let interior = cyl.interior(g);
    let mut in_ball = vec![false; n];
    for &x in &ball {
        in_ball[x] = true;
    }
    for f in terminals {
        if f.len() != n {
            return Err(Error::InvalidConfig("terminal data length != vertex count".into()));
        }
        if let Some(&x) = ball.iter().find(|&&x| f[x] < 0.0) {
            return Err(Error::NegativeBoundaryData { vertex: x, value: f[x] });
        }
    }
    let mode = schedule.time_mode();
    let (grid, cuts) = time_grid(schedule, cyl.t1, cyl.t2, extra, CYLINDER_GRID_STEP)?;
    let cols = terminals.len();
    let terminal_value = |x: usize, j: usize| -> f64 {
        let keep = match mode {
            TimeMode::Discrete => in_ball[x],
            TimeMode::Continuous => interior[x],
        };
        if keep {
            terminals[j][x]
        } else {
            lateral.value(x)
        }
    };
    let init = DenseMatrix::from_fn(n, cols, terminal_value);
    let trace = match mode {
        TimeMode::Discrete => {
            let mut out = vec![init];
            for &s in grid[1..].iter().rev() {
                let mut m = step_csr::<f64>(schedule, s).mul_dense(out.last().unwrap());
                for x in (0..n).filter(|&x| !interior[x]) {
                    for v in m.row_mut(x) {
                        *v = lateral.value(x);
                    }
                }
                out.push(m);
            }
            out.reverse();
            out
        }
        TimeMode::Continuous => {
            let held: Vec<bool> = interior.iter().map(|&b| !b).collect();
            backward_trace(schedule, &grid, init, Some(&held))?
        }
    };
    let sols = (0..cols)
        .map(|j| {
            let values: Vec<Vec<f64>> = trace.iter().map(|m| m.column(j)).collect();
            let nonnegative = values.iter().all(|v| ball.iter().all(|&x| v[x] >= -POSITIVITY_TOL));
            CylinderSolution {
                cylinder: *cyl,
                mode,
                times: grid.clone(),
                values,
                cuts: cuts.clone(),
                ball: ball.clone(),
                interior: interior.clone(),
                nonnegative,
            }
        })
        .collect();
    Ok(sols)
}

pub fn solve_cylinder(
    schedule: &ConductanceSchedule,
    cyl: &Cylinder,
    terminal: &[f64],
    lateral: &Lateral,
) -> Result<CylinderSolution> {
    Ok(solve_cylinder_family(schedule, cyl, &[terminal.to_vec()], lateral, &[])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::compose_discrete;
    use std::sync::Arc;

    fn cycle(n: usize, mode: TimeMode, horizon: f64) -> ConductanceSchedule {
        let g = Arc::new(Graph::cycle(n).unwrap().with_loops().unwrap());
        ConductanceSchedule::static_uniform(g, 1.0, 1.0, mode, horizon).unwrap()
    }

    #[test]
    fn constants_are_solutions() {
        for mode in [TimeMode::Discrete, TimeMode::Continuous] {
            let s = cycle(12, mode, 6.0);
            let cyl = Cylinder::new(2.0, 6.0, 0, 3.0).unwrap();
            let sol = solve_cylinder(&s, &cyl, &[1.0; 12], &Lateral::Constant(1.0)).unwrap();
            for v in &sol.values {
                for &x in &sol.ball {
                    assert!((v[x] - 1.0).abs() < 1e-12);
                }
            }
            assert!(sol.residual(&s).unwrap() <= sol.residual_tolerance());
        }
    }

    #[test]
    fn delta_terminal_is_killed_kernel() {
        // On a ball covering the graph nothing is killed: u = K_{s,t2} delta_y.
        let s = cycle(8, TimeMode::Discrete, 5.0);
        let cyl = Cylinder::new(1.0, 5.0, 0, 8.0).unwrap();
        let mut d = vec![0.0; 8];
        d[3] = 1.0;
        let sol = solve_cylinder(&s, &cyl, &d, &Lateral::Zero).unwrap();
        let k = compose_discrete::<f64>(&s, 1, 5).unwrap();
        for x in 0..8 {
            assert!((sol.values[0][x] - k.get(x, 3)).abs() < 1e-15);
        }
        // A small ball kills mass: row sums stay below one.
        let small = Cylinder::new(1.0, 5.0, 0, 2.0).unwrap();
        let ones = solve_cylinder(&s, &small, &[1.0; 8], &Lateral::Zero).unwrap();
        assert!(ones.values[0].iter().all(|&v| v <= 1.0 && v >= 0.0));
        assert!(ones.values[0][0] < 1.0);
        assert!(ones.residual(&s).unwrap() <= DISCRETE_RESIDUAL_TOL);
    }

    #[test]
    fn continuous_residual_small() {
        let s = cycle(10, TimeMode::Continuous, 3.0);
        let cyl = Cylinder::new(0.0, 3.0, 0, 3.0).unwrap();
        let mut d = vec![0.0; 10];
        d[1] = 1.0;
        let sol = solve_cylinder(&s, &cyl, &d, &Lateral::Zero).unwrap();
        assert!(sol.residual(&s).unwrap() <= CONTINUOUS_RESIDUAL_TOL, "{}", sol.residual(&s).unwrap());
        assert!(sol.nonnegative);
        let sq = sol.map(|v| v * v);
        assert!(sq.verify_subsolution(&s).is_ok());
    }

    #[test]
    fn negative_data_rejected() {
        let s = cycle(6, TimeMode::Discrete, 3.0);
        let cyl = Cylinder::new(0.0, 3.0, 0, 2.0).unwrap();
        let mut d = vec![0.0; 6];
        d[1] = -1.0;
        assert!(matches!(solve_cylinder(&s, &cyl, &d, &Lateral::Zero), Err(Error::NegativeBoundaryData { vertex: 1, .. })));
    }
}
