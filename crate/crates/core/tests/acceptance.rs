//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `harness = false`, so the lines print under a plain `cargo test`.
//! The process fails only when a criterion outside `KNOWN_UNATTAINABLE`
//! fails, or when one of those starts passing (so the list stays honest).

mod common;

use common::*;
use rand::Rng;
use serde_json::json;
use std::sync::Arc;
use std::time::{Duration, Instant};
use tempo_kernel::experiments::{
    compute_a_t, counterexample_suite, drift_suite, exactness_check, monotone_mu_check, mu_lower_bound_sweep,
    rescaled_schedule, CounterexampleParams,
};
use tempo_kernel::graphs::{ConductanceSchedule, ExponentField, Graph, Growth, PerturbationBounds, TimeMode};
use tempo_kernel::heat_checks::{
    d_doubling_check, gaffney_check, ghke_fit, holder_check, holder_cylinder, phi_family, phi_quotient, solve_cylinder_family,
    GhkeMode, Lateral, PhiParams,
};
use tempo_kernel::kernels::{kernel, one_step_kernel, walk_mode, WeightField};
use tempo_kernel::nash_bounds::{diff_eq_check, on_diagonal_sup};
use tempo_kernel::profiles::{ProfileMode, Profiles};

/// Criteria that cannot pass as stated; the analysis is kept with the
/// project's decision notes.
const KNOWN_UNATTAINABLE: &[u32] = &[7, 9];

const THETAS: [f64; 6] = [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0];
/// Cap on the ratio of largest to smallest value for "within factor 2".
const SCALE_FACTOR: f64 = 2.0;
const EXACT_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: serde_json::Value,
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn lazy_cycle(n: usize) -> Graph {
    Graph::cycle(n).unwrap().with_loops().unwrap()
}

fn monotone_cycle(n: usize, horizon: f64, mode: TimeMode) -> ConductanceSchedule {
    let g = Arc::new(lazy_cycle(n));
    let m = g.edge_count();
    let growth = (0..m)
        .map(|e| if e % 3 == 0 { Growth::Saturating { rate: 0.05, limit: 2.0 } } else { Growth::Linear { slope: 0.01, cap: 64.0 } })
        .collect();
    ConductanceSchedule::monotone(g, vec![1.0; m], growth, mode, horizon).unwrap()
}

fn c1_exactness() -> Outcome {
    let mut r = rng(1001);
    let mut failures = Vec::new();
    let mut worst = [0.0f64; 4];
    let start = Instant::now();
    for i in 0..20 {
        let g = random_graph(&mut r, 64);
        let h = r.random_range(2..=32);
        let mode = if i % 4 == 3 { TimeMode::Continuous } else { TimeMode::Discrete };
        let s = if r.random_bool(0.5) { random_tabulated(&mut r, g, h, mode) } else { random_monotone(&mut r, g, h, mode) };
        let e = exactness_check(&s).unwrap();
        for (w, v) in worst.iter_mut().zip([e.stochasticity, e.reversibility, e.semigroup, e.propagation]) {
            *w = w.max(v);
        }
        if !e.pass {
            failures.push(json!({"case": i, "n": s.vertex_count(), "horizon": h, "report": e}));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: failures.is_empty() && elapsed < Duration::from_secs(60),
        detail: json!({"worst [stoch, rev, semigroup, prop]": worst, "failures": failures, "seconds": elapsed.as_secs_f64()}),
    }
}

fn c2_monotone_mu() -> Outcome {
    let mut r = rng(1002);
    let mut violations = 0;
    for _ in 0..10 {
        let g = random_graph(&mut r, 40);
        let h = r.random_range(4..=24);
        let s = random_monotone(&mut r, g, h, TimeMode::Discrete);
        for t in 1..=h {
            violations += monotone_mu_check(&s, t, EXACT_TOL).unwrap().violations;
        }
    }
    let st = static_cycle(16, true, 16.0, TimeMode::Discrete);
    let m = monotone_mu_check(&st, 16, EXACT_TOL).unwrap();
    Outcome {
        pass: violations == 0 && m.violations == 0 && m.max_deviation <= 1e-14,
        detail: json!({"violations": violations, "static_max_deviation": m.max_deviation}),
    }
}

fn c3_cheeger() -> Outcome {
    let start = Instant::now();
    let mut catalog = vec![Graph::torus2d(3, 3).unwrap()];
    for n in 2..=12 {
        catalog.push(Graph::path(n).unwrap());
        catalog.push(Graph::star(n).unwrap());
        if n >= 3 {
            catalog.push(Graph::cycle(n).unwrap());
        }
    }
    let (mut samples, mut violations) = (0, 0);
    for g in catalog {
        for loops in [false, true] {
            let g = if loops { g.with_loops().unwrap() } else { g.clone() };
            let s = ConductanceSchedule::static_uniform(Arc::new(g), 1.0, 1.0, TimeMode::Discrete, 1.0).unwrap();
            let k = one_step_kernel::<f64>(&s, 0.0).unwrap();
            let p = Profiles::compute(&k.dense(), k.source_measure(), ProfileMode::Exact).unwrap();
            for u in p.breakpoints() {
                let (l, phi) = (p.spectral(u).unwrap(), p.conductance(u).unwrap());
                samples += 1;
                if !(0.5 * phi * phi <= l * (1.0 + EXACT_TOL) + 1e-15 && l <= phi * (1.0 + EXACT_TOL) + 1e-15) {
                    violations += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: violations == 0 && elapsed < Duration::from_secs(300),
        detail: json!({"samples": samples, "violations": violations, "seconds": elapsed.as_secs_f64()}),
    }
}

fn c4_diff_eq() -> Outcome {
    let mut r = rng(1004);
    let graphs = [
        Graph::cycle(10).unwrap(),
        Graph::path(9).unwrap(),
        Graph::star(8).unwrap(),
        Graph::torus2d(3, 3).unwrap(),
        Graph::tree(2, 2).unwrap(),
    ];
    let mut rows = Vec::new();
    let mut violations = 0;
    for g in graphs {
        let s = random_monotone(&mut r, g.with_loops().unwrap(), 24, TimeMode::Discrete);
        let rep = diff_eq_check(&s, 24).unwrap();
        violations += rep.violations;
        rows.push(json!({"pairs": rep.entries.len(), "worst_ratio": rep.worst_ratio, "duality": rep.max_duality_defect}));
    }
    Outcome { pass: violations == 0, detail: json!({"violations": violations, "schedules": rows}) }
}

fn c5_gaffney() -> Outcome {
    let mut r = rng(1005);
    let mut violations = 0;
    let mut zero_excess: f64 = 0.0;
    let mut checked = 0;
    let mut thetas = THETAS.to_vec();
    thetas.push(0.0);
    for i in 0..5 {
        let g = match i {
            0 => lazy_cycle(24),
            1 => Graph::path(20).unwrap().with_loops().unwrap(),
            2 => Graph::torus2d(5, 5).unwrap().with_loops().unwrap(),
            3 => Graph::star(12).unwrap().with_loops().unwrap(),
            _ => Graph::tree(2, 3).unwrap().with_loops().unwrap(),
        };
        for mode in [TimeMode::Discrete, TimeMode::Continuous] {
            let s = random_monotone(&mut r, g.clone(), 20, mode);
            let rho = WeightField::distance_from(s.graph(), 0.0, 0).unwrap();
            for (a, b) in [(0.0, 1.0), (2.0, 6.0), (4.0, 20.0)] {
                let rep = gaffney_check(&s, a, b, &thetas, &rho).unwrap();
                for e in &rep.entries {
                    checked += 1;
                    if !e.pass {
                        violations += 1;
                    }
                    if e.theta == 0.0 {
                        zero_excess = zero_excess.max(e.measured - 1.0);
                    }
                }
            }
        }
    }
    Outcome {
        pass: violations == 0 && zero_excess <= EXACT_TOL,
        detail: json!({"entries": checked, "violations": violations, "theta0_excess": zero_excess}),
    }
}

fn c6_on_diagonal() -> Outcome {
    let lags = [16usize, 64, 256];
    let s0 = 8usize;
    let mut rows = Vec::new();
    let mut pass = true;
    for (name, s) in [
        ("static", static_cycle(128, true, (s0 + 256) as f64, TimeMode::Discrete)),
        ("monotone", monotone_cycle(128, (s0 + 256) as f64, TimeMode::Discrete)),
    ] {
        let scaled: Vec<f64> = lags
            .iter()
            .map(|&l| {
                let k = kernel(&s, s0 as f64, (s0 + l) as f64, walk_mode(&s)).unwrap();
                let pi = s.vertex_conductance(s0 as f64).unwrap();
                let v = s.graph().ball(0, (l as f64).sqrt()).members.iter().map(|&x| pi[x]).sum::<f64>();
                on_diagonal_sup(&k).0 * v
            })
            .collect();
        let sp = spread(&scaled);
        pass &= scaled.iter().all(|v| v.is_finite()) && sp <= SCALE_FACTOR;
        rows.push(json!({"schedule": name, "sup_K_over_pi_times_v": scaled, "spread": sp}));
    }
    Outcome { pass, detail: json!(rows) }
}

fn c7_phi_holder() -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    let graphs = [("cycle64", lazy_cycle(64)), ("torus8x8", Graph::torus2d(8, 8).unwrap().with_loops().unwrap())];
    for (gname, g) in graphs {
        for kind in ["static", "monotone"] {
            let horizon = 4.0 * 64.0;
            let s = if kind == "static" {
                ConductanceSchedule::static_uniform(Arc::new(g.clone()), 1.0, 1.0, TimeMode::Continuous, horizon).unwrap()
            } else {
                let m = g.edge_count();
                let growth = (0..m)
                    .map(|e| if e % 2 == 0 { Growth::Saturating { rate: 0.02, limit: 2.0 } } else { Growth::Constant })
                    .collect();
                ConductanceSchedule::monotone(Arc::new(g.clone()), vec![1.0; m], growth, TimeMode::Continuous, horizon).unwrap()
            };
            let mut gammas = Vec::new();
            let mut per_r = Vec::new();
            for radius in [2.0, 4.0, 8.0] {
                let big_t = 4.0 * radius * radius;
                let params = PhiParams { seed: 7, ..PhiParams::default() };
                let family = phi_family(&s, 0, radius, big_t, &params).unwrap();
                let (gamma_hat, _) = phi_quotient(s.graph(), &family, 0, radius, big_t, params.theta);
                // Diagnostic only: the random members alone, without the delta data.
                let random = &family[family.len() - params.random_members..];
                let (gamma_random, _) = phi_quotient(s.graph(), random, 0, radius, big_t, params.theta);
                let cyl = holder_cylinder(0, radius, big_t).unwrap();
                let n = s.vertex_count();
                let indicator: Vec<f64> =
                    (0..n).map(|x| if (s.graph().distance(0, x) as f64) <= radius { 1.0 } else { 0.0 }).collect();
                let mut r = rng(radius as u64);
                let random: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
                let sols = solve_cylinder_family(&s, &cyl, &[indicator, random], &Lateral::Zero, &[]).unwrap();
                let mut h_min = f64::INFINITY;
                let mut osc = 0;
                for sol in &sols {
                    let h = holder_check(&s, 0, radius, big_t, sol, gamma_hat).unwrap();
                    h_min = h_min.min(h.h_est);
                    osc += h.oscillation_violations;
                }
                let ok = gamma_hat > 0.0 && h_min > 0.0 && osc == 0;
                pass &= ok;
                gammas.push(gamma_hat);
                per_r.push(json!({"R": radius, "gamma_hat": gamma_hat, "gamma_random_only": gamma_random, "h_est_min": h_min, "oscillation_violations": osc}));
            }
            let sp = spread(&gammas);
            pass &= sp <= SCALE_FACTOR;
            rows.push(json!({"graph": gname, "schedule": kind, "gamma_spread": sp, "radii": per_r}));
        }
    }
    Outcome { pass, detail: json!(rows) }
}

fn c8_ghke() -> Outcome {
    let lags = [16usize, 64, 256];
    let s0 = 8usize;
    let s = monotone_cycle(128, (s0 + 256) as f64, TimeMode::Discrete);
    let n = s.vertex_count();
    let mut c_star = Vec::new();
    for &l in &lags {
        let catalog: Vec<_> = (0..n).map(|y| (s0 as f64, (s0 + l) as f64, 0usize, y)).collect();
        let fit = ghke_fit(&s, &catalog, GhkeMode::Auto).unwrap();
        c_star.push(fit.c_star);
    }
    let sp = spread(&c_star);
    let c1: Vec<f64> = [128.0, 256.0]
        .iter()
        .map(|&t| d_doubling_check(&s, 0, t, &[4.0, 16.0, 32.0]).unwrap().c1)
        .collect();
    let c1_spread = spread(&c1);
    Outcome {
        pass: c_star.iter().all(|c| c.is_finite()) && sp <= SCALE_FACTOR && c1.iter().all(|c| c.is_finite()) && c1_spread <= SCALE_FACTOR,
        detail: json!({"c_star": c_star, "c_star_spread": sp, "d_doubling_c1": c1, "c1_spread": c1_spread}),
    }
}

fn c9_drift() -> Outcome {
    let start = Instant::now();
    let rep = drift_suite(0.3, 0.3, 10_000).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: rep.speed_pass && rep.pair_pass && elapsed < Duration::from_secs(120),
        detail: json!({
            "speed": rep.speed,
            "mean_over_n": rep.mean_over_n,
            "predicted": rep.predicted,
            "speed_rel_error": rep.speed_rel_error,
            "speed_pass": rep.speed_pass,
            "pair_frequencies": rep.pair_frequencies,
            "pair_rel_error": rep.pair_rel_error,
            "pair_pass": rep.pair_pass,
            "seconds": elapsed.as_secs_f64(),
        }),
    }
}

fn c10_counterexample() -> Outcome {
    let start = Instant::now();
    let rep = counterexample_suite(&CounterexampleParams::new(0.3, 0.25, 4096, 7)).unwrap();
    let elapsed = start.elapsed();
    let flagged_from_512 = rep.entries.iter().filter(|e| e.n >= 512).all(|e| rep.lower_flagged.contains(&e.n));
    Outcome {
        pass: rep.budget_bounded
            && rep.p_strictly_decreasing
            && rep.p_slope < 0.0
            && rep.ghkl_flag
            && flagged_from_512
            && elapsed < Duration::from_secs(600),
        detail: json!({
            "budget_spread": rep.budget_spread,
            "p_n": rep.entries.iter().map(|e| e.p_n).collect::<Vec<_>>(),
            "p_slope": rep.p_slope,
            "c_lower": rep.entries.iter().map(|e| e.c_lower).collect::<Vec<_>>(),
            "lower_flagged": rep.lower_flagged,
            "seconds": elapsed.as_secs_f64(),
        }),
    }
}

fn c11_perturbative() -> Outcome {
    let g = Arc::new(lazy_cycle(8));
    let m = g.edge_count();
    let s = ConductanceSchedule::perturbative(
        g,
        vec![1.0; m],
        ExponentField::SinLog { amplitude: 0.1, phases: Some((0..m).map(|e| e as f64 * 0.9).collect()) },
        PerturbationBounds::default(),
        TimeMode::Discrete,
        64.0,
    )
    .unwrap();
    let budget = compute_a_t(&s, &[0, 1, 3, 7, 15, 31, 63, 64]).unwrap();
    let (resc, rep) = rescaled_schedule(&s, &budget, 0).unwrap();
    let sweep = mu_lower_bound_sweep(&s, &budget, 1.0).unwrap();
    Outcome {
        pass: budget.big_a.is_finite()
            && budget.cond_pert
            && resc.is_monotone()
            && rep.kernel_defect <= 1e-14
            && sweep.violations == 0,
        detail: json!({
            "A": budget.big_a,
            "growth_exponent": budget.growth_exponent,
            "kernel_defect": rep.kernel_defect,
            "pairs": sweep.pairs,
            "violations": sweep.violations,
            "min_ratio": sweep.min_ratio,
            "bound": sweep.bound,
        }),
    }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "exactness suite", c1_exactness),
        (2, "monotone evolving measures", c2_monotone_mu),
        (3, "Cheeger sandwich", c3_cheeger),
        (4, "constant-free decay lemma", c4_diff_eq),
        (5, "Gaffney bound", c5_gaffney),
        (6, "on-diagonal scaling", c6_on_diagonal),
        (7, "PHI and Hölder stability", c7_phi_holder),
        (8, "Gaussian envelope fit", c8_ghke),
        (9, "drift reproduction", c9_drift),
        (10, "oscillating counterexample", c10_counterexample),
        (11, "perturbative budget", c11_perturbative),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut surprises = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name} ({secs:.1} s) {}", out.detail);
        if out.pass == KNOWN_UNATTAINABLE.contains(&id) {
            surprises.push(id);
        }
    }
    if !surprises.is_empty() {
        eprintln!("unexpected outcome for criteria {surprises:?}");
        std::process::exit(1);
    }
}
