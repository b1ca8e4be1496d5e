mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;
use tempo_kernel::graphs::{Graph, TimeMode};
use tempo_kernel::nash_bounds::{
    a_n_certificate, big_f, certified_nash_sequence, diff_eq_check, f_inverse, psi_recursion,
    psi_uniform, verify_diag_bound_dtrw,
};
use tempo_kernel::profiles::{NashFunction, PowerPiece};

/// Composite Simpson in `log s`, endpoints pulled inside so a jump at either
/// end reads the piece being integrated.
fn oracle_f(u: f64, a: f64, n: impl Fn(f64) -> f64) -> f64 {
    let steps = 200_000;
    let (la, lu) = ((a * (1.0 + 1e-13)).ln(), (u * (1.0 - 1e-13)).ln());
    let h = (lu - la) / steps as f64;
    let g = |l: f64| n(l.exp());
    let mut acc = g(la) + g(lu);
    for i in 1..steps {
        acc += g(la + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn sample_profile() -> NashFunction {
    NashFunction::piecewise(vec![
        PowerPiece { start: 0.0, coeff: 1.0, exp: 0.5 },
        PowerPiece { start: 4.0, coeff: 2.5, exp: 0.0 },
        PowerPiece { start: 10.0, coeff: 0.3, exp: 1.0 },
    ])
    .unwrap()
}

#[test]
fn f_matches_quadrature() {
    let n = sample_profile();
    let custom = {
        let n = n.clone();
        NashFunction::Custom(Arc::new(move |s| n.eval(s)))
    };
    // Split at the jumps so Simpson converges.
    for (a, u) in [(0.5f64, 3.0f64), (1.0, 4.0), (4.0, 9.0), (10.0, 50.0), (0.25, 64.0)] {
        let mut cuts: Vec<f64> = vec![a];
        cuts.extend([4.0f64, 10.0].into_iter().filter(|&c| a < c && c < u));
        cuts.push(u);
        let want: f64 = cuts.windows(2).map(|w| oracle_f(w[1], w[0], |s| n.eval(s))).sum();
        let closed = big_f(u, a, &n).unwrap();
        let numeric = big_f(u, a, &custom).unwrap();
        assert!((closed - want).abs() <= 1e-9 * want.max(1.0), "closed F({u};{a}) {closed} vs {want}");
        assert!((numeric - want).abs() <= 1e-6 * want.max(1.0), "numeric F({u};{a}) {numeric} vs {want}");
    }
}

#[test]
fn psi_has_the_power_law_closed_form() {
    // N(s) = c s^p gives F^{-1}(t; a) = (a^p + p t / c)^{1/p}.
    for (c, p) in [(1.0, 1.0), (0.5, 2.0), (3.0, 0.5)] {
        let n = NashFunction::power(c, p);
        for t in [0.0, 0.3, 1.0, 7.0, 100.0] {
            let a: f64 = 0.7;
            let want = 1.0 / (a.powf(p) + p * t / c).powf(1.0 / p);
            let got = psi_uniform(t, a, &n).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "c={c} p={p} t={t}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn f_inverse_inverts_f(c in 0.1f64..5.0, p in 0.0f64..2.0, a in 0.1f64..10.0, t in 0.0f64..20.0) {
        let n = NashFunction::power(c, p);
        let u = f_inverse(t, a, &n).unwrap();
        prop_assert!(u >= a);
        let back = big_f(u, a, &n).unwrap();
        prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0), "{} vs {}", back, t);
    }

    #[test]
    fn psi_is_positive_and_strictly_decreasing(c in 0.1f64..5.0, p in 0.0f64..2.0, seed in 0.01f64..10.0, n in 1usize..20) {
        let prof = NashFunction::power(c, p);
        let psi = psi_recursion(&[prof], n, seed).unwrap();
        prop_assert_eq!(psi.values.len(), n + 1);
        for w in psi.values.windows(2) {
            prop_assert!(w[1] > 0.0 && w[1] < w[0]);
        }
    }
}

#[test]
fn diff_eq_holds_without_constants_on_monotone_schedules() {
    let mut r = rng(404);
    for _ in 0..3 {
        let g = match r.random_range(0..3) {
            0 => Graph::cycle(r.random_range(6..=10)).unwrap(),
            1 => Graph::path(r.random_range(5..=9)).unwrap(),
            _ => Graph::star(7).unwrap(),
        };
        let s = random_monotone(&mut r, g.with_loops().unwrap(), 12, TimeMode::Discrete);
        let rep = diff_eq_check(&s, 12).unwrap();
        assert_eq!(rep.violations, 0, "worst {:?} ratio {}", rep.worst, rep.worst_ratio);
        assert!(rep.max_duality_defect <= 1e-10);
        assert!(rep.worst_ratio <= 1.0 + 1e-12);
    }
}

#[test]
fn a_n_certificate_bounds_the_kernel() {
    let mut r = rng(12);
    let s = random_monotone(&mut r, Graph::cycle(8).unwrap().with_loops().unwrap(), 10, TimeMode::Discrete);
    let profiles = certified_nash_sequence(&s, 10).unwrap();
    for m in [0, 3, 7] {
        let rep = a_n_certificate(&s, m, 10, &profiles).unwrap();
        assert!(rep.pass, "m={m}: M_N = {}", rep.m_n);
        assert!(rep.m_n <= 1.0 + 1e-12);
    }
}

#[test]
fn on_diagonal_decay_follows_psi() {
    // One-dimensional shape N(s) = s^2, regular with c_n = sqrt 2.
    let s = static_cycle(16, true, 64.0, TimeMode::Discrete);
    let n = NashFunction::power(1.0, 2.0);
    let pairs: Vec<(usize, usize)> = [1, 2, 4, 8, 16, 32, 64].iter().map(|&t| (0, t)).collect();
    let rep = verify_diag_bound_dtrw(&s, &pairs, &n, 2f64.sqrt(), 1.0, 3.0).unwrap();
    assert!(rep.regularity.as_ref().unwrap().pass);
    assert!(rep.c_n_prime.is_finite() && rep.c_n_prime > 0.0);
    for e in &rep.entries {
        assert!(e.measured <= rep.c_n_prime * e.bound * (1.0 + 1e-12));
    }
}
