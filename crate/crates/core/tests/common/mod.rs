#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use tempo_kernel::graphs::{ConductanceSchedule, Graph, Growth, TimeMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small connected graph drawn from the standard families.
pub fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize) -> Graph {
    let g = loop {
        let g = match rng.random_range(0..5) {
            0 => Graph::path(rng.random_range(2..=max_vertices)),
            1 => Graph::cycle(rng.random_range(3..=max_vertices)),
            2 => {
                let w = rng.random_range(2..=(max_vertices as f64).sqrt() as usize);
                Graph::torus2d(w.max(3), (max_vertices / w.max(3)).clamp(3, 8))
            }
            3 => Graph::star(rng.random_range(2..max_vertices)),
            _ => Graph::tree(2, rng.random_range(1..=4)),
        };
        if let Ok(g) = g {
            if g.vertex_count() <= max_vertices {
                break g;
            }
        }
    };
    if rng.random_bool(0.5) {
        g.with_loops().unwrap()
    } else {
        g
    }
}

/// Piecewise-constant random conductances in `[0.5, 2]`, changing at every
/// integer time.
pub fn random_tabulated(rng: &mut ChaCha8Rng, g: Graph, horizon: usize, mode: TimeMode) -> ConductanceSchedule {
    let g = Arc::new(g);
    let edges = g.edges().to_vec();
    let times: Vec<f64> = (0..=horizon).map(|k| k as f64).collect();
    let values = times
        .iter()
        .map(|_| edges.iter().map(|_| rng.random_range(0.5..2.0)).collect())
        .collect();
    ConductanceSchedule::tabulated(g, times, &edges, values, mode, horizon as f64).unwrap()
}

pub fn random_monotone(rng: &mut ChaCha8Rng, g: Graph, horizon: usize, mode: TimeMode) -> ConductanceSchedule {
    let g = Arc::new(g);
    let m = g.edge_count();
    let base = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
    let growth = (0..m)
        .map(|_| match rng.random_range(0..4) {
            0 => Growth::Constant,
            1 => Growth::Linear { slope: rng.random_range(0.0..0.5), cap: rng.random_range(1.0..horizon as f64) },
            2 => Growth::Step { at: rng.random_range(1..=horizon) as f64, factor: rng.random_range(1.0..3.0) },
            _ => Growth::Saturating { rate: rng.random_range(0.05..1.0), limit: rng.random_range(1.0..4.0) },
        })
        .collect();
    ConductanceSchedule::monotone(g, base, growth, mode, horizon as f64).unwrap()
}

pub fn static_cycle(n: usize, loops: bool, horizon: f64, mode: TimeMode) -> ConductanceSchedule {
    let g = Graph::cycle(n).unwrap();
    let g = if loops { g.with_loops().unwrap() } else { g };
    ConductanceSchedule::static_uniform(Arc::new(g), 1.0, 1.0, mode, horizon).unwrap()
}

/// Transition matrix of step `k` built straight from the edge weights.
pub fn step_matrix(s: &ConductanceSchedule, k: usize) -> DMatrix<f64> {
    let g = s.graph();
    let n = g.vertex_count();
    let mut p = DMatrix::zeros(n, n);
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        let w = s.edge_weight(k as f64, e);
        p[(a, b)] += w;
        if a != b {
            p[(b, a)] += w;
        }
    }
    for x in 0..n {
        let total: f64 = p.row(x).sum();
        p.row_mut(x).scale_mut(1.0 / total);
    }
    p
}

/// `K_{m+1} ... K_n` by plain matrix products.
pub fn oracle_kernel(s: &ConductanceSchedule, m: usize, n: usize) -> DMatrix<f64> {
    let size = s.vertex_count();
    (m + 1..=n).fold(DMatrix::identity(size, size), |acc, k| acc * step_matrix(s, k))
}

/// `exp((t - s) (P - I))` for a static generator, by the nalgebra matrix exponential.
pub fn oracle_csrw_static(s: &ConductanceSchedule, dt: f64) -> DMatrix<f64> {
    let p = step_matrix(s, 0);
    let n = p.nrows();
    ((p - DMatrix::identity(n, n)) * dt).exp()
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn to_nalgebra(k: &tempo_kernel::kernels::Kernel<f64>) -> DMatrix<f64> {
    let d = k.dense();
    DMatrix::from_fn(d.rows(), d.cols(), |i, j| d[(i, j)])
}
