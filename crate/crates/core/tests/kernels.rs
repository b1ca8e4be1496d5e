mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;
use tempo_kernel::experiments::{exactness_check, monotone_mu_check};
use tempo_kernel::graphs::{counterexample_deltas, ConductanceSchedule, Graph, Growth, TimeMode};
use tempo_kernel::kernels::{
    compose_discrete, csrw_kernel, kernel, l1_norm, one_step_kernel, propagate_measure, sample_paths, walk_mode,
    WalkMode, MAX_ODE_STEP,
};

#[test]
fn discrete_kernel_matches_matrix_products() {
    let mut r = rng(11);
    for _ in 0..10 {
        let g = random_graph(&mut r, 40);
        let h = r.random_range(1..=16);
        let s = random_tabulated(&mut r, g, h, TimeMode::Discrete);
        let m = r.random_range(0..h);
        let k = compose_discrete::<f64>(&s, m, h).unwrap();
        assert!(max_diff(&to_nalgebra(&k), &oracle_kernel(&s, m, h)) < 1e-13);
    }
}

#[test]
fn static_csrw_is_a_matrix_exponential() {
    let s = static_cycle(12, true, 6.0, TimeMode::Continuous);
    let k = csrw_kernel::<f64>(&s, 0.5, 5.0, MAX_ODE_STEP).unwrap();
    assert!(max_diff(&to_nalgebra(&k), &oracle_csrw_static(&s, 4.5)) < 1e-8);
}

#[test]
fn piecewise_csrw_is_a_product_of_exponentials() {
    let mut r = rng(5);
    let g = Graph::path(7).unwrap();
    let s = random_tabulated(&mut r, g, 4, TimeMode::Continuous);
    let n = s.vertex_count();
    let oracle = (0..4).fold(DMatrix::identity(n, n), |acc, k| {
        acc * (step_matrix(&s, k) - DMatrix::identity(n, n)).exp()
    });
    let k = kernel(&s, 0.0, 4.0, WalkMode::Csrw).unwrap();
    assert!(max_diff(&to_nalgebra(&k), &oracle) < 1e-7);
}

#[test]
fn distances_agree_with_floyd_warshall() {
    let mut r = rng(3);
    for _ in 0..20 {
        let g = random_graph(&mut r, 50);
        let n = g.vertex_count();
        let mut d = vec![vec![usize::MAX / 4; n]; n];
        for x in 0..n {
            d[x][x] = 0;
        }
        for &(a, b) in g.edges() {
            if a != b {
                d[a][b] = 1;
                d[b][a] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                assert_eq!(g.distance(x, y), d[x][y]);
            }
        }
    }
}

#[test]
fn counterexample_conductances_take_two_values() {
    let deltas = counterexample_deltas(64, 0.25);
    let s = ConductanceSchedule::counterexample_z(64, 0.3, &deltas).unwrap();
    for n in 0..=64 {
        let pi = s.vertex_conductance(n as f64).unwrap();
        let d = deltas[n];
        let g = s.graph();
        for (x, &p) in pi.iter().enumerate() {
            // Vertices on the truncation edge have one neighbour missing.
            if g.truncation_boundary().contains(&x) {
                continue;
            }
            assert!((p - (3.0 - d)).abs() < 1e-14 || (p - (3.0 + d)).abs() < 1e-14, "n={n} x={x} p={p}");
        }
        if n >= 1 {
            let k = one_step_kernel::<f64>(&s, n as f64).unwrap();
            let lazy = k.min_diagonal();
            assert!(lazy >= 1.0 / 7.0 - 1e-15, "laziness {lazy} at n={n}");
            let dense = k.dense();
            let ellip = (0..dense.rows())
                .flat_map(|x| (0..dense.cols()).map(move |y| (x, y)))
                .filter(|&(x, y)| dense[(x, y)] > 0.0)
                .map(|(x, y)| dense[(x, y)])
                .fold(f64::INFINITY, f64::min);
            assert!(ellip >= 1.0 / 7.0 - 1e-15);
        }
    }
}

#[test]
fn monte_carlo_matches_exact_law() {
    let mut r = rng(21);
    let s = random_monotone(&mut r, Graph::cycle(12).unwrap().with_loops().unwrap(), 16, TimeMode::Discrete);
    let n_paths = 1_000_000;
    for (mode, t) in [(WalkMode::Dtrw, 16.0), (WalkMode::Csrw, 6.0)] {
        let sample = sample_paths(&s, mode, 0, t, n_paths, 99).unwrap();
        let exact = match mode {
            WalkMode::Dtrw => oracle_kernel(&s, 0, 16).row(0).iter().copied().collect::<Vec<_>>(),
            WalkMode::Csrw => {
                let k = csrw_kernel::<f64>(&s, 0.0, t, MAX_ODE_STEP).unwrap();
                (0..s.vertex_count()).map(|y| k.get(0, y)).collect()
            }
        };
        for (y, &p) in exact.iter().enumerate() {
            let freq = sample.histogram[y] as f64 / n_paths as f64;
            let sigma = (p * (1.0 - p) / n_paths as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * sigma, "{mode:?} cell {y}: {freq} vs {p}");
        }
    }
}

fn random_schedule(seed: u64, max_vertices: usize, max_horizon: usize) -> ConductanceSchedule {
    let mut r = rng(seed);
    let g = random_graph(&mut r, max_vertices);
    let h = r.random_range(2..=max_horizon);
    let mode = if r.random_bool(0.75) { TimeMode::Discrete } else { TimeMode::Continuous };
    if r.random_bool(0.5) {
        random_tabulated(&mut r, g, h, mode)
    } else {
        random_monotone(&mut r, g, h, mode)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exactness_on_random_schedules(seed in any::<u64>()) {
        let s = random_schedule(seed, 24, 12);
        let e = exactness_check(&s).unwrap();
        prop_assert!(e.pass, "{:?}", e);
    }

    #[test]
    fn one_step_kernels_are_reversible(seed in any::<u64>()) {
        let s = random_schedule(seed, 40, 8);
        for k in 1..=s.horizon() as usize {
            let p = one_step_kernel::<f64>(&s, k as f64).unwrap();
            prop_assert!(p.reversibility_defect() <= 1e-14 * p.source_measure().iter().copied().fold(1.0, f64::max));
        }
    }

    #[test]
    fn conductances_are_symmetric(seed in any::<u64>()) {
        let s = random_schedule(seed, 30, 8);
        let g = s.graph();
        for t in s.grid() {
            for &(a, b) in g.edges() {
                prop_assert_eq!(s.conductance(t, a, b).unwrap(), s.conductance(t, b, a).unwrap());
            }
        }
    }

    #[test]
    fn measures_are_ordered_on_monotone_schedules(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 24);
        let h = r.random_range(2..=12);
        let s = random_monotone(&mut r, g, h, TimeMode::Discrete);
        let m = monotone_mu_check(&s, h, 1e-12).unwrap();
        prop_assert_eq!(m.violations, 0);
    }

    #[test]
    fn propagation_route_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 24);
        let s = random_tabulated(&mut r, g, 10, TimeMode::Discrete);
        let pi0 = s.vertex_conductance(0.0).unwrap();
        let v = r.random_range(0..=10) as f64;
        let direct = propagate_measure(&s, &pi0, 0.0, 10.0, WalkMode::Dtrw).unwrap();
        let mid = propagate_measure(&s, &pi0, 0.0, v, WalkMode::Dtrw).unwrap();
        let routed = propagate_measure(&s, &mid, v, 10.0, WalkMode::Dtrw).unwrap();
        let l1: f64 = direct.iter().zip(&routed).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(l1 <= 1e-12 * direct.iter().sum::<f64>());
    }

    #[test]
    fn monotone_kernels_contract_l1_and_satisfy_jensen(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 24);
        let s = random_monotone(&mut r, g, 8, TimeMode::Discrete);
        let k = kernel(&s, 2.0, 8.0, walk_mode(&s)).unwrap();
        let (pi_s, pi_t) = (k.source_measure().to_vec(), k.target_measure().to_vec());
        for _ in 0..100 {
            let f: Vec<f64> = (0..s.vertex_count()).map(|_| r.random_range(-1.0..1.0)).collect();
            let kf = k.apply(&f);
            prop_assert!(l1_norm(&kf, &pi_s) <= l1_norm(&f, &pi_t) * (1.0 + 1e-12));
            let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
            let kf2 = k.apply(&f2);
            for (a, b) in kf.iter().zip(&kf2) {
                prop_assert!(a * a <= b + 1e-14);
            }
        }
    }
}

#[test]
fn static_measures_are_invariant() {
    let g = Arc::new(Graph::torus2d(4, 5).unwrap().with_loops().unwrap());
    let s = ConductanceSchedule::static_uniform(g, 1.5, 0.5, TimeMode::Discrete, 10.0).unwrap();
    let m = monotone_mu_check(&s, 10, 1e-12).unwrap();
    assert_eq!(m.violations, 0);
    assert!(m.max_deviation < 1e-14);
}

#[test]
fn decreasing_schedule_reverses_order() {
    // A decreasing schedule built from a table: mu_{s,t} >= pi_t.
    let g = Arc::new(Graph::path(6).unwrap());
    let up = ConductanceSchedule::monotone(
        g.clone(),
        vec![1.0; g.edge_count()],
        vec![Growth::Linear { slope: 0.5, cap: 8.0 }; g.edge_count()],
        TimeMode::Discrete,
        8.0,
    )
    .unwrap();
    let edges = g.edges().to_vec();
    let times: Vec<f64> = (0..=8).map(|k| k as f64).collect();
    let values = times.iter().map(|&t| (0..edges.len()).map(|e| up.edge_weight(8.0 - t, e)).collect()).collect();
    let down = ConductanceSchedule::tabulated(g, times, &edges, values, TimeMode::Discrete, 8.0).unwrap();
    let pi8 = down.vertex_conductance(8.0).unwrap();
    for s in 0..8 {
        let pis = down.vertex_conductance(s as f64).unwrap();
        let mu = propagate_measure(&down, &pis, s as f64, 8.0, WalkMode::Dtrw).unwrap();
        for (m, p) in mu.iter().zip(&pi8) {
            assert!(*m >= p * (1.0 - 1e-12));
        }
    }
}
