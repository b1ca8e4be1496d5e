use super::subsets::{connected_subsets, SetArena, EXACT_SUBSET_CAP};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest Dirichlet eigenvalue of `I - Q` on `omega` in `L^2(pi)`, with its
/// eigenvector (indexed like `omega`, unit `L^2(pi)` norm, nonnegative).
pub fn dirichlet_eigenpair(q: &DenseMatrix<f64>, pi: &[f64], omega: &[usize]) -> (f64, Vec<f64>) {
    let m = omega.len();
    if m == 0 {
        return (f64::INFINITY, vec![]);
    }
    // D^{1/2} (I - Q_omega) D^{-1/2}, symmetric for pi-reversible Q.
    let a = DenseMatrix::from_fn(m, m, |i, j| {
        let (x, y) = (omega[i], omega[j]);
        let id = if i == j { 1.0 } else { 0.0 };
        id - pi[x].sqrt() * q[(x, y)] / pi[y].sqrt()
    })
    .symmetrized();
    let eig = symmetric_eigen(&a);
    let mut v: Vec<f64> = eig
        .vectors
        .column(0)
        .iter()
        .zip(omega)
        .map(|(&c, &x)| c / pi[x].sqrt())
        .collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    (eig.values[0].max(0.0), v)
}

pub fn dirichlet_eigenvalue(q: &DenseMatrix<f64>, pi: &[f64], omega: &[usize]) -> f64 {
    dirichlet_eigenpair(q, pi, omega).0
}

/// `(1 / pi(omega)) sum_{x in omega} pi(x) Q(x, omega^c)`.
pub fn boundary_flux(q: &DenseMatrix<f64>, pi: &[f64], omega: &[usize]) -> f64 {
    let n = q.rows();
    let mut inside = vec![false; n];
    for &x in omega {
        inside[x] = true;
    }
    let mass: f64 = omega.iter().map(|&x| pi[x]).sum();
    let flux: f64 = omega
        .iter()
        .map(|&x| pi[x] * (0..n).filter(|&y| !inside[y]).map(|y| q[(x, y)]).sum::<f64>())
        .sum();
    flux / mass
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Exact when the connected-subset count fits under the cap, else heuristic.
    Auto,
    Exact,
    Heuristic,
}

/// Candidate sets with their mass, Dirichlet eigenvalue and boundary flux,
/// sorted by mass; prefix minima give `Lambda(u)` and `Phi(u)`.
#[derive(Debug, Clone)]
pub struct Profiles {
    sets: SetArena,
    mass: Vec<f64>,
    lambda: Vec<f64>,
    phi: Vec<f64>,
    lambda_arg: Vec<usize>,
    phi_arg: Vec<usize>,
    total_mass: f64,
    min_mass: f64,
    exact: bool,
}

fn support_adjacency(q: &DenseMatrix<f64>) -> Vec<Vec<usize>> {
    let n = q.rows();
    (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x && (q[(x, y)] > 0.0 || q[(y, x)] > 0.0))
                .collect()
        })
        .collect()
}

/// Nested balls (in the support graph of `Q`) around every vertex plus sweep
/// sets of the second eigenvector; every candidate is connected.
fn heuristic_candidates(q: &DenseMatrix<f64>, pi: &[f64]) -> SetArena {
    let adj = support_adjacency(q);
    let n = q.rows();
    let mut arena = SetArena::default();
    for x in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[x] = 0;
        let mut order = vec![x];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &u in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    order.push(u);
                }
            }
        }
        let mut end = 0;
        while end < order.len() {
            let r = dist[order[end]];
            while end < order.len() && dist[order[end]] == r {
                end += 1;
            }
            let mut s: Vec<usize> = order[..end].to_vec();
            s.sort_unstable();
            arena.push(s);
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| pi[i].sqrt() * q[(i, j)] / pi[j].sqrt()).symmetrized();
    let eig = symmetric_eigen(&a);
    if n >= 2 {
        let fiedler: Vec<f64> = (0..n).map(|i| eig.vectors[(i, n - 2)] / pi[i].sqrt()).collect();
        for sign in [1.0, -1.0] {
            let mut order = all.clone();
            order.sort_by(|&i, &j| (sign * fiedler[j]).total_cmp(&(sign * fiedler[i])));
            for k in 1..=n {
                let mut s = order[..k].to_vec();
                s.sort_unstable();
                if is_connected(&adj, &s) {
                    arena.push(s);
                }
            }
        }
    }
    arena
}

fn is_connected(adj: &[Vec<usize>], set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let mut seen = vec![set[0]];
    let mut head = 0;
    while head < seen.len() {
        let v = seen[head];
        head += 1;
        for &u in &adj[v] {
            if set.binary_search(&u).is_ok() && !seen.contains(&u) {
                seen.push(u);
            }
        }
    }
    seen.len() == set.len()
}

impl Profiles {
    /// Enumerate candidate sets of `Q` (exact: all connected subsets of the
    /// support graph) and tabulate `lambda_Q` and the boundary flux on each.
    pub fn compute(q: &DenseMatrix<f64>, pi: &[f64], mode: ProfileMode) -> Result<Self> {
        Self::compute_with_cap(q, pi, mode, EXACT_SUBSET_CAP)
    }

    pub fn compute_with_cap(q: &DenseMatrix<f64>, pi: &[f64], mode: ProfileMode, cap: usize) -> Result<Self> {
        if let Some(x) = pi.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::DegenerateMeasure { vertex: x });
        }
        let (sets, exact) = match mode {
            ProfileMode::Exact => (connected_subsets(&support_adjacency(q), cap)?, true),
            ProfileMode::Heuristic => (heuristic_candidates(q, pi), false),
            ProfileMode::Auto => match connected_subsets(&support_adjacency(q), cap) {
                Ok(s) => (s, true),
                Err(Error::ExactModeTooLarge { .. }) => (heuristic_candidates(q, pi), false),
                Err(e) => return Err(e),
            },
        };
        let n = q.rows();
        let vals: Vec<(f64, f64, f64)> = (0..sets.len())
            .into_par_iter()
            .map(|i| {
                let s: Vec<usize> = sets.get(i).iter().map(|&x| x as usize).collect();
                let mass: f64 = s.iter().map(|&x| pi[x]).sum();
                if s.len() == n {
                    return (mass, 0.0, 0.0);
                }
                (mass, dirichlet_eigenvalue(q, pi, &s), boundary_flux(q, pi, &s))
            })
            .collect();
        let mut order: Vec<usize> = (0..sets.len()).collect();
        order.sort_by(|&a, &b| vals[a].0.total_cmp(&vals[b].0).then(a.cmp(&b)));
        let mut p = Profiles {
            sets: SetArena::default(),
            mass: Vec::with_capacity(order.len()),
            lambda: Vec::with_capacity(order.len()),
            phi: Vec::with_capacity(order.len()),
            lambda_arg: Vec::with_capacity(order.len()),
            phi_arg: Vec::with_capacity(order.len()),
            total_mass: pi.iter().sum(),
            min_mass: pi.iter().copied().fold(f64::INFINITY, f64::min),
            exact,
        };
        let (mut best_l, mut best_p) = ((f64::INFINITY, 0), (f64::INFINITY, 0));
        for (k, &i) in order.iter().enumerate() {
            p.sets.push(sets.get(i).iter().map(|&x| x as usize));
            let (m, l, f) = vals[i];
            if l < best_l.0 {
                best_l = (l, k);
            }
            if f < best_p.0 {
                best_p = (f, k);
            }
            p.mass.push(m);
            p.lambda.push(best_l.0);
            p.phi.push(best_p.0);
            p.lambda_arg.push(best_l.1);
            p.phi_arg.push(best_p.1);
        }
        Ok(p)
    }

    /// Whether every connected subset was evaluated; otherwise the curves are
    /// upper bounds on `Lambda` and `Phi` only.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn min_mass(&self) -> f64 {
        self.min_mass
    }

    pub fn candidate_count(&self) -> usize {
        self.mass.len()
    }

    fn index(&self, u: f64) -> Option<usize> {
        let k = self.mass.partition_point(|&m| m <= u * (1.0 + 1e-12));
        k.checked_sub(1)
    }

    /// `Lambda(u)`; `None` when no set has mass `<= u`.
    pub fn spectral(&self, u: f64) -> Option<f64> {
        self.index(u).map(|k| self.lambda[k])
    }

    pub fn conductance(&self, u: f64) -> Option<f64> {
        self.index(u).map(|k| self.phi[k])
    }

    /// `Lambda(u)` with `+inf` for an empty feasible family.
    pub fn spectral_or_inf(&self, u: f64) -> f64 {
        self.spectral(u).unwrap_or(f64::INFINITY)
    }

    pub fn spectral_minimizer(&self, u: f64) -> Option<Vec<usize>> {
        self.index(u)
            .map(|k| self.sets.get(self.lambda_arg[k]).iter().map(|&x| x as usize).collect())
    }

    pub fn conductance_minimizer(&self, u: f64) -> Option<Vec<usize>> {
        self.index(u)
            .map(|k| self.sets.get(self.phi_arg[k]).iter().map(|&x| x as usize).collect())
    }

    /// Distinct candidate masses, i.e. the breakpoints of both step functions.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.mass.clone();
        b.dedup();
        b
    }
}

/// `Lambda_{Q,pi}(u)` with an explicit mode; `None` below the smallest mass.
pub fn spectral_profile(q: &DenseMatrix<f64>, pi: &[f64], u: f64, mode: ProfileMode) -> Result<Option<f64>> {
    Ok(Profiles::compute(q, pi, mode)?.spectral(u))
}

pub fn conductance_profile(q: &DenseMatrix<f64>, pi: &[f64], u: f64, mode: ProfileMode) -> Result<Option<f64>> {
    Ok(Profiles::compute(q, pi, mode)?.conductance(u))
}

/// `(mass, Phi(mass))` at every breakpoint of the exact conductance profile,
/// without the eigenvalue solves.
pub fn conductance_steps(q: &DenseMatrix<f64>, pi: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(x) = pi.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::DegenerateMeasure { vertex: x });
    }
    let sets = connected_subsets(&support_adjacency(q), EXACT_SUBSET_CAP)?;
    let mut vals: Vec<(f64, f64)> = (0..sets.len())
        .into_par_iter()
        .map(|i| {
            let s: Vec<usize> = sets.get(i).iter().map(|&x| x as usize).collect();
            (s.iter().map(|&x| pi[x]).sum(), boundary_flux(q, pi, &s))
        })
        .collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for (m, f) in vals {
        best = best.min(f);
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 = best,
            _ => out.push((m, best)),
        }
    }
    Ok(out)
}
