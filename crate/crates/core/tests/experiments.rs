mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;
use tempo_kernel::experiments::{compute_a_t, drift_suite, rescaled_schedule, CounterexampleParams, counterexample_suite};
use tempo_kernel::graphs::{ConductanceSchedule, ExponentField, Graph, PerturbationBounds, TimeMode};

fn rho(s: &ConductanceSchedule, a: usize, b: usize) -> f64 {
    let (pa, pb) = (s.vertex_conductance(a as f64).unwrap(), s.vertex_conductance(b as f64).unwrap());
    pa.iter().zip(&pb).map(|(x, y)| (y / x).ln().abs()).fold(0.0, f64::max)
}

/// `sup` over all partitions of `[0, t]` of the summed ratios, by dynamic programming.
fn oracle_a(s: &ConductanceSchedule, horizon: usize) -> Vec<f64> {
    let mut best = vec![0.0f64; horizon + 1];
    for t in 1..=horizon {
        best[t] = (0..t).map(|u| best[u] + rho(s, u, t)).fold(0.0, f64::max);
    }
    best
}

fn sin_log(n: usize, amplitude: f64, horizon: usize, phases: bool) -> ConductanceSchedule {
    let g = Arc::new(Graph::cycle(n).unwrap().with_loops().unwrap());
    let m = g.edge_count();
    let phases = phases.then(|| (0..m).map(|e| e as f64 * 0.7).collect());
    ConductanceSchedule::perturbative(
        g,
        vec![1.0; m],
        ExponentField::SinLog { amplitude, phases },
        PerturbationBounds::default(),
        TimeMode::Discrete,
        horizon as f64,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn budget_is_the_finest_partition_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 20);
        let h = r.random_range(2..=20);
        let s = random_tabulated(&mut r, g, h, TimeMode::Discrete);
        let b = compute_a_t(&s, &[0, h / 2, h]).unwrap();
        let want = oracle_a(&s, h);
        for t in 0..=h {
            prop_assert!((b.a[t] - want[t]).abs() <= 1e-12 * want[t].max(1.0));
        }
        prop_assert_eq!(b.subadditivity_violations, 0);
    }

    #[test]
    fn rescaling_keeps_every_kernel(seed in any::<u64>(), amp in 0.01f64..0.2) {
        let mut r = rng(seed);
        let s = sin_log(r.random_range(5..12), amp, 40, r.random_bool(0.5));
        let b = compute_a_t(&s, &[0, 20, 40]).unwrap();
        let (resc, rep) = rescaled_schedule(&s, &b, 0).unwrap();
        prop_assert!(resc.is_monotone());
        prop_assert!(rep.kernels_invariant);
        for k in 1..=40 {
            prop_assert!(max_diff(&step_matrix(&s, k), &step_matrix(&resc, k)) <= 1e-14);
        }
    }
}

#[test]
fn measure_lower_bound_from_products() {
    let s = sin_log(8, 0.1, 48, true);
    let b = compute_a_t(&s, &[0, 24, 48]).unwrap();
    let gamma = 1.0;
    let bound = (-gamma * b.big_a).exp();
    let n = s.vertex_count();
    let mut checked = 0;
    for t in 1..=48usize {
        let pi_t = s.vertex_conductance(t as f64).unwrap();
        for sv in 0..t {
            if (t + 1) as f64 > 2f64.powf(gamma) * (sv + 1) as f64 {
                continue;
            }
            let pi_s = nalgebra::RowDVector::from_vec(s.vertex_conductance(sv as f64).unwrap());
            let mu = pi_s * oracle_kernel(&s, sv, t);
            for y in 0..n {
                assert!(mu[y] >= bound * pi_t[y] * (1.0 - 1e-12), "s={sv} t={t} y={y}");
            }
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn drift_pairs_are_symmetric_in_the_middle() {
    let rep = drift_suite(0.3, 0.3, 400).unwrap();
    let f = rep.pair_frequencies;
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((f[1] - f[2]).abs() < 0.02);
    assert!(rep.speed > 0.0);
}

#[test]
fn counterexample_budget_grows_like_the_design() {
    let params = CounterexampleParams::new(0.3, 0.25, 256, 3);
    let rep = counterexample_suite(&params).unwrap();
    assert!(rep.budget_bounded);
    assert_eq!(rep.step_bound_violations, 0);
    assert!(rep.p_strictly_decreasing);
    let last = rep.entries.last().unwrap();
    assert!(last.budget_ratio > 0.3 && last.budget_ratio < 2.0, "{}", last.budget_ratio);
}
