mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;
use tempo_kernel::graphs::{ConductanceSchedule, Graph, TimeMode};
use tempo_kernel::kernels::one_step_kernel;
use tempo_kernel::profiles::{nash_profile_bounds, ProfileMode, Profiles};
use tempo_kernel::Matrix;

fn profiles_of(s: &ConductanceSchedule, t: f64) -> (Profiles, Matrix, Vec<f64>) {
    let k = one_step_kernel::<f64>(s, t).unwrap();
    let q = k.dense();
    let pi = k.source_measure().to_vec();
    (Profiles::compute(&q, &pi, ProfileMode::Exact).unwrap(), q, pi)
}

/// `(mass, lambda, phi)` for every nonempty subset, by brute force.
fn all_subsets(q: &Matrix, pi: &[f64]) -> Vec<(f64, f64, f64)> {
    let n = pi.len();
    (1u32..(1 << n))
        .map(|mask| {
            let omega: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
            let m = omega.len();
            let a = DMatrix::from_fn(m, m, |i, j| {
                let (x, y) = (omega[i], omega[j]);
                let id = if i == j { 1.0 } else { 0.0 };
                id - (pi[x] / pi[y]).sqrt() * q[(x, y)]
            });
            let a = (&a + a.transpose()) * 0.5;
            let lambda = a.symmetric_eigenvalues().min().max(0.0);
            let mass: f64 = omega.iter().map(|&x| pi[x]).sum();
            let flux: f64 = omega
                .iter()
                .map(|&x| pi[x] * (0..n).filter(|&y| mask >> y & 1 == 0).map(|y| q[(x, y)]).sum::<f64>())
                .sum();
            (mass, lambda, flux / mass)
        })
        .collect()
}

fn oracle_at(table: &[(f64, f64, f64)], u: f64) -> (f64, f64) {
    table
        .iter()
        .filter(|r| r.0 <= u * (1.0 + 1e-12))
        .fold((f64::INFINITY, f64::INFINITY), |(l, p), r| (l.min(r.1), p.min(r.2)))
}

#[test]
fn path4_closed_form() {
    let g = Arc::new(Graph::path(4).unwrap());
    let s = ConductanceSchedule::static_uniform(g, 1.0, 1.0, TimeMode::Discrete, 1.0).unwrap();
    let (p, _, _) = profiles_of(&s, 0.0);
    let lambda_3 = 1.0 - 0.5f64.sqrt();
    let expected = [
        (1.0, 1.0, 1.0),
        (2.0, 1.0, 1.0),
        (3.0, lambda_3, 1.0 / 3.0),
        (4.0, lambda_3, 1.0 / 3.0),
        (5.0, 1.0 - 3.0f64.sqrt() / 2.0, 0.2),
        (6.0, 0.0, 0.0),
    ];
    for (u, l, phi) in expected {
        assert!((p.spectral(u).unwrap() - l).abs() < 1e-12, "Lambda({u})");
        assert!((p.conductance(u).unwrap() - phi).abs() < 1e-12, "Phi({u})");
    }
    assert_eq!(p.spectral(0.5), None);
}

fn small_catalog() -> Vec<Graph> {
    let mut v = vec![Graph::torus2d(3, 3).unwrap()];
    for n in 2..=10 {
        v.push(Graph::path(n).unwrap());
        v.push(Graph::star(n).unwrap());
        if n >= 3 {
            v.push(Graph::cycle(n).unwrap());
        }
    }
    v
}

#[test]
fn exact_profiles_equal_full_enumeration() {
    let mut r = rng(8);
    for g in small_catalog().into_iter().filter(|g| g.vertex_count() <= 10) {
        let g = if r.random_bool(0.5) { g.with_loops().unwrap() } else { g };
        let s = random_tabulated(&mut r, g, 1, TimeMode::Discrete);
        let (p, q, pi) = profiles_of(&s, 1.0);
        assert!(p.is_exact());
        let table = all_subsets(&q, &pi);
        let mut us: Vec<f64> = table.iter().map(|r| r.0).collect();
        us.push(pi.iter().sum::<f64>() * 2.0);
        for u in us {
            let (l, phi) = oracle_at(&table, u);
            assert!((p.spectral(u).unwrap() - l).abs() < 1e-10, "Lambda({u}): {} vs {l}", p.spectral(u).unwrap());
            assert!((p.conductance(u).unwrap() - phi).abs() < 1e-12);
        }
    }
}

#[test]
fn cheeger_sandwich_on_catalog() {
    let mut catalog = small_catalog();
    catalog.extend([11, 12].iter().flat_map(|&n| [Graph::path(n).unwrap(), Graph::cycle(n).unwrap(), Graph::star(n).unwrap()]));
    let mut violations = 0;
    for g in catalog {
        for loops in [false, true] {
            let g = if loops { g.with_loops().unwrap() } else { g.clone() };
            let s = ConductanceSchedule::static_uniform(Arc::new(g), 1.0, 1.0, TimeMode::Discrete, 1.0).unwrap();
            let (p, _, _) = profiles_of(&s, 0.0);
            for u in p.breakpoints() {
                let (l, phi) = (p.spectral(u).unwrap(), p.conductance(u).unwrap());
                if !(0.5 * phi * phi <= l * (1.0 + 1e-12) + 1e-14 && l <= phi * (1.0 + 1e-12) + 1e-14) {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn nash_samples_stay_in_the_sandwich() {
    let s = static_cycle(8, true, 1.0, TimeMode::Discrete);
    let (p, q, pi) = profiles_of(&s, 0.0);
    for sv in [3.0, 4.5, 6.0, 9.0, 12.0] {
        let b = nash_profile_bounds(&p, &q, &pi, sv, 2000, 1).unwrap();
        assert!(b.lower <= b.upper);
        assert!(b.sampled <= b.upper * (1.0 + 1e-9), "s={sv}: {b:?}");
        assert!(b.sampled >= b.lower * (1.0 - 1e-9), "s={sv}: {b:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profiles_are_nonincreasing_and_sandwiched(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 12);
        let s = random_tabulated(&mut r, g, 1, TimeMode::Discrete);
        let (p, _, _) = profiles_of(&s, 1.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for u in p.breakpoints() {
            let (l, phi) = (p.spectral(u).unwrap(), p.conductance(u).unwrap());
            prop_assert!(l <= prev.0 && phi <= prev.1);
            prop_assert!(0.5 * phi * phi <= l * (1.0 + 1e-12) + 1e-14);
            prop_assert!(l <= phi * (1.0 + 1e-12) + 1e-14);
            prev = (l, phi);
        }
    }

    #[test]
    fn global_rescaling_leaves_lambda_and_phi_fixed(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 10);
        let s = random_tabulated(&mut r, g, 1, TimeMode::Discrete);
        let (p, q, pi) = profiles_of(&s, 1.0);
        let scaled: Vec<f64> = pi.iter().map(|v| v * c).collect();
        let ps = Profiles::compute(&q, &scaled, ProfileMode::Exact).unwrap();
        for u in p.breakpoints() {
            prop_assert!((p.spectral(u).unwrap() - ps.spectral(u * c).unwrap()).abs() < 1e-10);
            prop_assert!((p.conductance(u).unwrap() - ps.conductance(u * c).unwrap()).abs() < 1e-12);
        }
    }
}
