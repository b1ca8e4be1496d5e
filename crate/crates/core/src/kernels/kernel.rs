use crate::error::{Error, Result};
use crate::graphs::ConductanceSchedule;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Graphs above this size keep kernels in compressed sparse rows.
pub const DENSE_LIMIT: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    /// Discrete-time walk, one kernel per integer step.
    Dtrw,
    /// Constant-speed walk: unit-rate Poisson jump times.
    Csrw,
}

#[derive(Debug, Clone)]
pub enum KernelMatrix<T: Scalar = f64> {
    Dense(DenseMatrix<T>),
    Sparse(CsrMatrix<T>),
}

impl<T: Scalar> KernelMatrix<T> {
    pub fn rows(&self) -> usize {
        match self {
            KernelMatrix::Dense(m) => m.rows(),
            KernelMatrix::Sparse(m) => m.rows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self {
            KernelMatrix::Dense(m) => m[(i, j)],
            KernelMatrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        match self {
            KernelMatrix::Dense(m) => m.clone(),
            KernelMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn mul_vec(&self, f: &[T]) -> Vec<T> {
        match self {
            KernelMatrix::Dense(m) => m.mul_vec(f),
            KernelMatrix::Sparse(m) => m.mul_vec(f),
        }
    }

    pub fn vec_mul(&self, mu: &[T]) -> Vec<T> {
        match self {
            KernelMatrix::Dense(m) => m.vec_mul(mu),
            KernelMatrix::Sparse(m) => m.vec_mul(mu),
        }
    }

    pub fn row_sums(&self) -> Vec<T> {
        match self {
            KernelMatrix::Dense(m) => m.row_sums(),
            KernelMatrix::Sparse(m) => (0..m.rows()).map(|i| m.row(i).map(|(_, v)| v).sum()).collect(),
        }
    }

    fn then(&self, other: &Self) -> Self {
        match (self, other) {
            (KernelMatrix::Dense(a), KernelMatrix::Dense(b)) => KernelMatrix::Dense(a.matmul(b)),
            (KernelMatrix::Dense(a), KernelMatrix::Sparse(b)) => KernelMatrix::Dense(b.left_mul_dense(a)),
            (KernelMatrix::Sparse(a), KernelMatrix::Dense(b)) => KernelMatrix::Dense(a.mul_dense(b)),
            (KernelMatrix::Sparse(a), KernelMatrix::Sparse(b)) => KernelMatrix::Sparse(a.matmul(b)),
        }
    }
}

/// Transition kernel `K_{s,t}` carrying the measures at both time slices:
/// rows are indexed at time `s` (measure `source`), columns at time `t`.
#[derive(Debug, Clone)]
pub struct Kernel<T: Scalar = f64> {
    matrix: KernelMatrix<T>,
    s: f64,
    t: f64,
    source: Vec<T>,
    target: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(matrix: KernelMatrix<T>, s: f64, t: f64, source: Vec<T>, target: Vec<T>) -> Self {
        debug_assert_eq!(matrix.rows(), source.len());
        Self {
            matrix,
            s,
            t,
            source,
            target,
        }
    }

    /// `K_{t,t} = I` with `pi_t` on both sides.
    pub fn identity(schedule: &ConductanceSchedule, t: f64) -> Result<Self> {
        let pi: Vec<T> = schedule.vertex_conductance(t)?.into_iter().map(T::of).collect();
        let n = pi.len();
        let m = if n > DENSE_LIMIT {
            KernelMatrix::Sparse(CsrMatrix::from_rows(n, (0..n).map(|i| vec![(i, T::one())]).collect()))
        } else {
            KernelMatrix::Dense(DenseMatrix::identity(n))
        };
        Ok(Self::new(m, t, t, pi.clone(), pi))
    }

    pub fn vertex_count(&self) -> usize {
        self.source.len()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn source_measure(&self) -> &[T] {
        &self.source
    }

    pub fn target_measure(&self) -> &[T] {
        &self.target
    }

    pub fn matrix(&self) -> &KernelMatrix<T> {
        &self.matrix
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.matrix.get(x, y)
    }

    pub fn dense(&self) -> DenseMatrix<T> {
        self.matrix.to_dense()
    }

    /// `(K f)(x) = sum_y K(x, y) f(y)`.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        self.matrix.mul_vec(f)
    }

    /// `(mu K)(y) = sum_x mu(x) K(x, y)`.
    pub fn push_forward(&self, mu: &[T]) -> Vec<T> {
        self.matrix.vec_mul(mu)
    }

    /// `K_{s,u} K_{u,t}`.
    pub fn then(&self, other: &Kernel<T>) -> Kernel<T> {
        Kernel::new(
            self.matrix.then(&other.matrix),
            self.s,
            other.t,
            self.source.clone(),
            other.target.clone(),
        )
    }

    /// `max_x |sum_y K(x, y) - 1|`.
    pub fn stochasticity_defect(&self) -> T {
        self.matrix
            .row_sums()
            .into_iter()
            .map(|r| (r - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// `max_{x,y} |pi(x) K(x,y) - pi(y) K(y,x)|` using the source measure.
    pub fn reversibility_defect(&self) -> T {
        let m = self.dense();
        let n = m.rows();
        let mut worst = T::zero();
        for x in 0..n {
            for y in 0..n {
                let d = (self.source[x] * m[(x, y)] - self.source[y] * m[(y, x)]).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `min_x K(x, x)`.
    pub fn min_diagonal(&self) -> T {
        (0..self.vertex_count())
            .map(|x| self.get(x, x))
            .fold(T::infinity(), T::min)
    }

    pub fn cast<U: Scalar>(&self) -> Kernel<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::of(x.as_f64())).collect::<Vec<U>>();
        let matrix = match &self.matrix {
            KernelMatrix::Dense(m) => KernelMatrix::Dense(m.cast()),
            KernelMatrix::Sparse(m) => KernelMatrix::Sparse(CsrMatrix::from_dense(&m.to_dense().cast())),
        };
        Kernel::new(matrix, self.s, self.t, conv(&self.source), conv(&self.target))
    }
}

/// Sparse one-step kernel `K_t(x, y) = pi_t(x, y) / pi_t(x)`, no range check.
pub(crate) fn step_csr<T: Scalar>(schedule: &ConductanceSchedule, t: f64) -> CsrMatrix<T> {
    let g = schedule.graph();
    let rows = (0..g.vertex_count())
        .map(|x| {
            let w: Vec<(usize, f64)> = g
                .incident(x)
                .iter()
                .map(|&(y, e)| (y, schedule.edge_weight(t, e)))
                .collect();
            let total: f64 = w.iter().map(|&(_, v)| v).sum();
            w.into_iter().map(|(y, v)| (y, T::of(v / total))).collect()
        })
        .collect();
    CsrMatrix::from_rows(g.vertex_count(), rows)
}

fn check_step_range(schedule: &ConductanceSchedule, m: usize, n: usize) -> Result<()> {
    schedule.check_time(n as f64)?;
    if m > n {
        return Err(Error::TimeOutOfRange {
            t: m as f64,
            horizon: n as f64,
        });
    }
    Ok(())
}

/// `K_t` with `pi_t` on both sides; time stamps `s = t`.
pub fn one_step_kernel<T: Scalar>(schedule: &ConductanceSchedule, t: f64) -> Result<Kernel<T>> {
    schedule.check_time(t)?;
    let pi: Vec<T> = schedule
        .vertex_conductance(t)?
        .into_iter()
        .map(T::of)
        .collect();
    let csr = step_csr(schedule, t);
    let matrix = if schedule.vertex_count() > DENSE_LIMIT {
        KernelMatrix::Sparse(csr)
    } else {
        KernelMatrix::Dense(csr.to_dense())
    };
    Ok(Kernel::new(matrix, t, t, pi.clone(), pi))
}

/// `K_{m,n} = K_{m+1} K_{m+2} ... K_n`, with `K_{n,n} = I`.
pub fn compose_discrete<T: Scalar>(schedule: &ConductanceSchedule, m: usize, n: usize) -> Result<Kernel<T>> {
    check_step_range(schedule, m, n)?;
    let nv = schedule.vertex_count();
    let mut acc: KernelMatrix<T> = if nv > DENSE_LIMIT {
        KernelMatrix::Sparse(CsrMatrix::from_rows(nv, (0..nv).map(|i| vec![(i, T::one())]).collect()))
    } else {
        KernelMatrix::Dense(DenseMatrix::identity(nv))
    };
    for k in (m + 1)..=n {
        let step = step_csr::<T>(schedule, k as f64);
        acc = match acc {
            KernelMatrix::Dense(a) => KernelMatrix::Dense(step.left_mul_dense(&a)),
            KernelMatrix::Sparse(a) => KernelMatrix::Sparse(a.matmul(&step)),
        };
    }
    let src = schedule.vertex_conductance(m as f64)?.into_iter().map(T::of).collect();
    let tgt = schedule.vertex_conductance(n as f64)?.into_iter().map(T::of).collect();
    Ok(Kernel::new(acc, m as f64, n as f64, src, tgt))
}

/// All of `K_{0,n}, K_{1,n}, ..., K_{n,n}` (dense), built right to left.
pub fn backward_family<T: Scalar>(schedule: &ConductanceSchedule, n: usize) -> Result<Vec<Kernel<T>>> {
    check_step_range(schedule, 0, n)?;
    let nv = schedule.vertex_count();
    let pis: Vec<Vec<T>> = (0..=n)
        .map(|k| {
            schedule
                .vertex_conductance_unchecked(k as f64)
                .into_iter()
                .map(T::of)
                .collect()
        })
        .collect();
    let mut mats = vec![DenseMatrix::identity(nv)];
    for m in (1..=n).rev() {
        let step = step_csr::<T>(schedule, m as f64);
        let next = step.mul_dense(mats.last().unwrap());
        mats.push(next);
    }
    mats.reverse();
    Ok(mats
        .into_iter()
        .enumerate()
        .map(|(m, k)| Kernel::new(KernelMatrix::Dense(k), m as f64, n as f64, pis[m].clone(), pis[n].clone()))
        .collect())
}

/// `K_{m,n} f` by repeated sparse steps.
pub fn pull_back_discrete(schedule: &ConductanceSchedule, f: &[f64], m: usize, n: usize) -> Result<Vec<f64>> {
    check_step_range(schedule, m, n)?;
    let mut v = f.to_vec();
    for k in ((m + 1)..=n).rev() {
        v = step_csr::<f64>(schedule, k as f64).mul_vec(&v);
    }
    Ok(v)
}

/// `mu K_{m,n}` by repeated sparse steps.
pub fn push_forward_discrete(schedule: &ConductanceSchedule, mu: &[f64], m: usize, n: usize) -> Result<Vec<f64>> {
    check_step_range(schedule, m, n)?;
    let mut v = mu.to_vec();
    for k in (m + 1)..=n {
        v = step_csr::<f64>(schedule, k as f64).vec_mul(&v);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Graph, TimeMode};
    use std::sync::Arc;

    #[test]
    fn single_edge_swap() {
        let g = Arc::new(Graph::path(2).unwrap());
        let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Discrete, 1.0).unwrap();
        let k = one_step_kernel::<f64>(&s, 0.0).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(0, 0), 0.0);
    }

    #[test]
    fn triangle_two_steps() {
        let g = Arc::new(Graph::cycle(3).unwrap());
        let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Discrete, 4.0).unwrap();
        let k = compose_discrete::<f64>(&s, 0, 2).unwrap();
        assert!((k.get(1, 1) - 0.5).abs() < 1e-15);
        let id = compose_discrete::<f64>(&s, 3, 3).unwrap();
        assert_eq!(id.get(2, 2), 1.0);
    }

    #[test]
    fn counterexample_step_entry() {
        let s = ConductanceSchedule::counterexample_z_constant(2, 0.3, 0.2).unwrap();
        let k = one_step_kernel::<f64>(&s, 0.0).unwrap();
        let o = 3;
        assert!((k.get(o, o + 1) - 1.3 / 2.8).abs() < 1e-15);
    }

    #[test]
    fn backward_family_matches_compose() {
        let s = ConductanceSchedule::counterexample_z_constant(6, 0.3, 0.1).unwrap();
        let fam = backward_family::<f64>(&s, 6).unwrap();
        for m in 0..=6 {
            let k = compose_discrete::<f64>(&s, m, 6).unwrap();
            assert!(k.dense().max_abs_diff(&fam[m].dense()) < 1e-14);
        }
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        let s = ConductanceSchedule::counterexample_z_constant(8, 0.3, 0.2).unwrap();
        let dense = compose_discrete::<f64>(&s, 2, 7).unwrap();
        let csr = CsrMatrix::from_dense(&DenseMatrix::<f64>::identity(s.vertex_count()));
        let mut acc = csr;
        for k in 3..=7 {
            acc = acc.matmul(&step_csr(&s, k as f64));
        }
        assert!(acc.to_dense().max_abs_diff(&dense.dense()) < 1e-15);
        let f: Vec<f64> = (0..s.vertex_count()).map(|i| (i as f64).sin()).collect();
        let a = pull_back_discrete(&s, &f, 2, 7).unwrap();
        let b = dense.apply(&f);
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-14));
    }
}
