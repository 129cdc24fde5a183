//! Independent recomputations of values the library derives.

mod common;

use common::*;
use qcl_core::eptas::{jumps, truth_plan, solve_ip_th, eptas, estimate_opt};
use qcl_core::lp::{modified_star, solve_generic_lp, ColgenOptions, LpProblem};
use qcl_core::numerics::*;
use qcl_core::prcrs::{attenuation_denominator, beta0, one_minus_inv_e};
use qcl_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: f64 = std::f64::consts::E;

// ---------------------------------------------------------------- constants

#[test]
fn beta_three_ways() {
    let closed = (19.0 - 67.0 * (-3.0f64).exp()) / 27.0;
    let quad = simpson(|y| (-y).exp() * pois_lt(3, 2.0 * y), 0.0, 1.0, 2000);
    let mid = final_bound_mid(3, 0.0);
    assert!((beta() - closed).abs() < 1e-15);
    assert!((closed - quad).abs() < 1e-9, "{closed} {quad}");
    assert!((closed - mid).abs() < 1e-9, "{closed} {mid}");
    assert!((beta() - 0.58016).abs() < 5e-6);
}

#[test]
fn attenuation_values() {
    assert_eq!(attenuation_b(0.0), 1.0);
    // int_0^1 e^{-2y}(1 + 2y + 2y^2) dy = 3/2 - 9/2 e^-2
    let d1 = 1.5 - 4.5 * (-2.0f64).exp();
    assert!((attenuation_denominator(1.0) - d1).abs() < 1e-14);
    assert!((attenuation_b(1.0) - beta() / d1).abs() < 1e-14);
    assert!((attenuation_b(1.0) - 0.6511).abs() < 1e-4);
    let quad = simpson(|y| (-(3.0 - 0.37) * y).exp() * (1.0 + 2.0 * y + 2.0 * y * y), 0.0, 1.0, 2000);
    assert!((attenuation_denominator(0.37) - quad).abs() < 1e-12);
    assert!((attenuation_b_inf(1.0) - (1.0 - 1.0 / E)).abs() < 1e-12);
    assert!((attenuation_b_inf(0.0) - 1.0).abs() < 1e-12);
    assert!((beta0() - (4.0 - E) / E).abs() < 1e-15);
    assert!((beta0() - 0.4715).abs() < 1e-4);
    let mut prev = f64::INFINITY;
    for i in 0..=1000 {
        let s = i as f64 / 1000.0;
        let (b, bi) = (attenuation_b(s), attenuation_b_inf(s));
        assert!(b <= prev + 1e-15 && (0.0..=1.0).contains(&b) && (0.0..=1.0).contains(&bi));
        prev = b;
    }
}

// ---------------------------------------------------------------- special functions

#[test]
fn poisson_examples_by_hand() {
    assert!((poisson_cdf_lt(3, 2.0) - 5.0 * (-2.0f64).exp()).abs() < 1e-15);
    assert!((poisson_cdf_lt(3, 2.0) - 0.67668).abs() < 1e-5);
    assert!((upper_incomplete_gamma_int(3, 2.0) - 10.0 * (-2.0f64).exp()).abs() < 1e-14);
    assert!((upper_incomplete_gamma_int(3, 2.0) - 1.35335).abs() < 1e-5);
}

#[test]
fn special_functions_against_quadrature() {
    let mut g = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let k: u64 = g.gen_range(1..25);
        let mu: f64 = g.gen_range(0.0..30.0);
        // P[Pois(mu) >= k] = int_0^mu t^{k-1} e^{-t} dt / (k-1)!
        let lower = simpson(|t| t.powi(k as i32 - 1) * (-t).exp(), 0.0, mu, 4000) / factorial(k - 1);
        assert!((poisson_tail_ge(k, mu) - lower).abs() < 1e-8, "k={k} mu={mu}");
        assert!((poisson_cdf_lt(k, mu) - (1.0 - lower)).abs() < 1e-8);
        assert!((poisson_cdf_lt(k, mu) - pois_lt(k, mu)).abs() < 1e-12);
        let upper = factorial(k - 1) - simpson(|t| t.powi(k as i32 - 1) * (-t).exp(), 0.0, mu, 4000);
        let g_int = upper_incomplete_gamma_int(k, mu);
        assert!((g_int - upper).abs() < 1e-8 * factorial(k - 1).max(1.0), "k={k} mu={mu}");
    }
}

/// The availability integrand, written out from its definition.
fn f_ell_quadrature(l: u64, x1: f64, xn1: f64) -> f64 {
    let lf = l as f64;
    let x0 = lf - xn1 - x1;
    let yc = (lf - 1.0) / x0;
    let f = |y: f64| {
        (0..l)
            .map(|k| (-y * (lf - x1)).exp() * (y * x0).powi(k as i32) / factorial(k))
            .sum::<f64>()
    };
    simpson(f, 0.0, yc, 4000)
}

#[test]
fn f_ell_against_quadrature() {
    let mut g = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let l: u64 = g.gen_range(3..60);
        let x1: f64 = g.gen_range(0.0..1.0);
        let xn1: f64 = g.gen_range(0.0..1.0) * (1.0 - x1);
        let ours = f_ell(l, x1, xn1).unwrap();
        let quad = f_ell_quadrature(l, x1, xn1);
        assert!((ours - quad).abs() < 1e-8, "l={l} x1={x1} xn1={xn1}: {ours} vs {quad}");
    }
    for xn1 in [0.0, 1e-9, 1e-4, 2e-3] {
        let quad = f_ell_quadrature(5, 0.3, xn1);
        assert!((f_ell(5, 0.3, xn1).unwrap() - quad).abs() < 1e-8);
    }
}

#[test]
fn f3_corner_and_final_bound_points() {
    assert!((f_ell(3, 0.0, 1.0).unwrap() - beta()).abs() < 1e-9);
    assert!((final_bound_mid(3, 0.0) - beta()).abs() < 1e-9);
    assert!(final_bound_mid(3, 0.5) >= beta() - 1e-12);
    assert!(final_bound_mid(119, 0.0) >= beta() - 1e-12);
    let quad = simpson(|y| pois_lt(3, 2.0 * y) * (-y * 0.5).exp(), 0.0, 1.0, 2000);
    assert!((availability_integral(3, 0.5) - quad).abs() < 1e-10);
}

#[test]
fn bennett_two_ways() {
    for x1 in [0.0, 0.25, 0.5, 0.9, 1.0] {
        let (a, b) = (bennett_bound_large(x1), bennett_bound_closed(x1));
        assert!((a - b).abs() < 1e-9, "x1={x1}: {a} vs {b}");
        assert!(b >= beta());
    }
}

// ---------------------------------------------------------------- LPs

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut g = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = g.gen_range(1..=3);
        let m = g.gen_range(1..=4);
        let c: Vec<f64> = (0..n).map(|_| g.gen_range(-0.5..1.0)).collect();
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| g.gen_range(0.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| g.gen_range(0.1..2.0)).collect();
        // every variable bounded so the LP is never unbounded
        let mut a_all = a.clone();
        let mut b_all = b.clone();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            a_all.push(e);
            b_all.push(3.0);
        }
        let res = solve_generic_lp(&LpProblem {
            c: c.clone(),
            a: a_all.clone(),
            b: b_all.clone(),
        })
        .unwrap();
        let oracle = lp_by_vertices(&c, &a_all, &b_all);
        assert!((res.value - oracle).abs() < 1e-9, "{} vs {oracle}", res.value);
        let dual: f64 = res.duals.iter().zip(&b_all).map(|(y, b)| y * b).sum();
        assert!((dual - res.value).abs() < 1e-7);
    }
}

/// LP-M rows written from the problem statement, for the vertex oracle.
fn lp_m_rows(inst: &Instance) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let (nu, nv, na) = (inst.n_offline(), inst.n_online(), inst.n_actions());
    let n = nu * nv * na;
    let idx = |u: usize, v: usize, a: usize| (u * nv + v) * na + a;
    let mut c = vec![0.0; n];
    let (mut rows, mut rhs) = (vec![], vec![]);
    for u in 0..nu {
        for v in 0..nv {
            for a in 0..na {
                c[idx(u, v, a)] = inst.r(u, v, a) * inst.q(u, v, a);
            }
            let mut e = vec![0.0; n];
            (0..na).for_each(|a| e[idx(u, v, a)] = 1.0);
            rows.push(e);
            rhs.push(1.0);
        }
    }
    let mut vertex = |members: Vec<(usize, usize)>, l: Patience| {
        let mut m = vec![0.0; n];
        let mut cnt = vec![0.0; n];
        for (u, v) in members {
            for a in 0..na {
                m[idx(u, v, a)] = inst.q(u, v, a);
                cnt[idx(u, v, a)] = 1.0;
            }
        }
        rows.push(m);
        rhs.push(1.0);
        if let Patience::Finite(l) = l {
            rows.push(cnt);
            rhs.push(l as f64);
        }
    };
    for u in 0..nu {
        vertex((0..nv).map(|v| (u, v)).collect(), inst.offline_patience[u]);
    }
    for v in 0..nv {
        vertex((0..nu).map(|u| (u, v)).collect(), inst.online_patience[v]);
    }
    (c, rows, rhs)
}

#[test]
fn lp_m_two_edge_star_by_vertices() {
    let inst = two_edge_star();
    let (c, a, b) = lp_m_rows(&inst);
    let oracle = lp_by_vertices(&c, &a, &b);
    // z1 = 1, z2 = 1/2: 0.5 * 1 + 0.5 * 0.6
    assert!((oracle - 0.8).abs() < 1e-12);
    assert!((solve_lp_m(&inst).unwrap().value - oracle).abs() < 1e-9);
}

#[test]
fn lp_m_small_by_vertices() {
    let mut done = 0;
    for seed in 0..400u64 {
        let inst = small_random(seed);
        if inst.n_pairs() > 3 {
            continue;
        }
        let (c, a, b) = lp_m_rows(&inst);
        let oracle = lp_by_vertices(&c, &a, &b);
        let ours = solve_lp_m(&inst).unwrap().value;
        assert!((ours - oracle).abs() < 1e-9, "seed {seed}: {ours} vs {oracle}");
        done += 1;
    }
    assert!(done >= 50);
}

#[test]
fn two_edge_star_lps_and_opt() {
    let inst = two_edge_star();
    let b = Budgets::default();
    let lpc = solve_lp_c_explicit(&inst, &b).unwrap();
    assert!((lpc.solution.objective - 0.8).abs() < 1e-9);
    let (cfg, w) = &lpc.solution.weights[0];
    assert_eq!((cfg.edges.clone(), *w), (vec![0, 1], 1.0));
    let cg = solve_lp_c_colgen(&inst, &ColgenOptions::exact(0.01)).unwrap();
    assert!((cg.solution.objective - 0.8).abs() < 1e-6);
    assert!((opt_dp(&inst, &b).unwrap().value - 0.8).abs() < 1e-12);
    let star = StarInstance::of_online(&inst, 0);
    let best = star_opt_bruteforce(&star, &b).unwrap();
    assert_eq!(best.edges, vec![0, 1]);
    assert!((best.value - 0.8).abs() < 1e-12);
    let fv = star_future_values(&star, &[0, 1]);
    for (got, want) in fv.values.iter().zip([0.8, 0.6, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn reward_identity_and_containment() {
    let b = Budgets::default();
    for seed in 0..100 {
        let inst = small_random(seed);
        let lpc = solve_lp_c_explicit(&inst, &b).unwrap();
        let m = &lpc.solution.marginals;
        let mut edge_side = 0.0;
        for u in 0..inst.n_offline() {
            for v in 0..inst.n_online() {
                for a in 0..inst.n_actions() {
                    edge_side += inst.r(u, v, a) * inst.q(u, v, a) * m.get(u, v, a);
                }
            }
        }
        assert!((edge_side - lpc.solution.objective).abs() < 1e-9);
        assert!(qcl_core::lp::check_lp_m_feasibility(m, &inst).is_empty());
        assert!(lpc.solution.objective <= solve_lp_m(&inst).unwrap().value + 1e-9);
    }
}

#[test]
fn pricing_rewrite_identity() {
    let mut g = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..50 {
        let inst = small_random(seed);
        let mut d = DualPrices::zeros(&inst);
        d.alpha.iter_mut().for_each(|x| *x = g.gen_range(0.0..0.5));
        d.gamma.iter_mut().for_each(|x| *x = g.gen_range(0.0..0.3));
        let star = modified_star(&inst, 0, &d);
        for cfg in enumerate_configs(&inst, 0, &Budgets::default()).unwrap() {
            let reach = cfg.reach(&inst);
            let charge: f64 = cfg
                .edges
                .iter()
                .zip(&cfg.actions)
                .zip(&reach)
                .map(|((&u, &a), p)| (inst.q(u, 0, a) * d.alpha[u] + d.gamma[u]) * p)
                .sum();
            let hat = star.value_of(&cfg.edges, &cfg.actions);
            assert!(hat >= cfg.val() - charge - 1e-12);
        }
    }
}

// ---------------------------------------------------------------- exact oracles

#[test]
fn single_action_infinite_patience_sorts_by_reward() {
    let b = Budgets::default();
    for seed in 0..50 {
        let inst = random_star_instance(seed, 4, 1, vec![Patience::Infinite]);
        let star = StarInstance::of_online(&inst, 0);
        let best = star_opt_bruteforce(&star, &b).unwrap();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&i, &j| star.r[j][0].total_cmp(&star.r[i][0]));
        let sorted = star.value_of(&order, &[0; 4]);
        assert!((best.value - sorted).abs() < 1e-12);
        assert!((opt_dp(&inst, &b).unwrap().value - sorted).abs() < 1e-9);
    }
}

#[test]
fn two_action_star_is_max_over_actions() {
    let b = Budgets::default();
    for seed in 0..30 {
        let inst = random_star_instance(seed, 3, 2, vec![Patience::Finite(2)]);
        let star = StarInstance::of_online(&inst, 0);
        let mut best = 0.0f64;
        for e1 in 0..3 {
            for e2 in 0..3 {
                for a1 in 0..2 {
                    best = best.max(star.value_of(&[e1], &[a1]));
                    for a2 in 0..2 {
                        if e1 != e2 {
                            best = best.max(star.value_of(&[e1, e2], &[a1, a2]));
                        }
                    }
                }
            }
        }
        assert!((star_opt_bruteforce(&star, &b).unwrap().value - best).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------- star scheme

#[test]
fn dominant_deterministic_edge_is_recovered() {
    let b = Budgets::default();
    for seed in 0..20 {
        let mut inst = random_star_instance(seed, 5, 1, vec![Patience::Finite(2)]);
        inst.set(3, 0, 0, 1.0, 50.0);
        let star = StarInstance::of_online(&inst, 0);
        let opt = star_opt_bruteforce(&star, &b).unwrap();
        let got = eptas(&star, 0.5, &b).unwrap();
        assert!(got.policy.edges.contains(&3));
        assert!((got.policy.value - opt.value).abs() < 1e-9);
    }
}

#[test]
fn truth_rounded_guess_is_feasible_and_some_candidate_is_close() {
    let b = Budgets::default();
    for seed in 0..40 {
        let inst = random_star_instance(seed, 5, 2, vec![Patience::Finite(3)]);
        let star = StarInstance::of_online(&inst, 0);
        let opt = star_opt_bruteforce(&star, &b).unwrap();
        if opt.value <= 0.0 {
            continue;
        }
        let eps = 0.5;
        let cands = estimate_opt(&star, eps).unwrap();
        assert!(cands.iter().any(|&c| c >= (1.0 - eps) * opt.value - 1e-12 && c <= opt.value + 1e-12));
        let fv = star_future_values(&star, &opt.edges);
        assert!(jumps(&fv.values, eps).len() as f64 <= 1.0 / eps);
        for &est in cands.iter().filter(|&&c| c <= opt.value + 1e-12) {
            let (plan, truth) = truth_plan(&star, &opt, est, eps);
            assert!(truth.is_feasible(&plan, &star), "seed {seed}");
            assert!(solve_ip_th(&plan, &star, &b).unwrap().is_some());
        }
    }
}

// ---------------------------------------------------------------- selection

#[test]
fn one_element_selection_probabilities() {
    use qcl_core::prcrs::estimate_selectability;
    let n = 400_000;
    for (l, want) in [(Patience::Finite(2), attenuation_b(1.0)), (Patience::Infinite, one_minus_inv_e())] {
        let input = PrcrsInput::single_action(l, vec![1.0], vec![1.0]);
        let rows = estimate_selectability(&input, SchemeFamily::Attenuated, n, 5).unwrap();
        let sigma = (want * (1.0 - want) / n as f64).sqrt();
        assert!((rows[0].estimate - want).abs() <= 4.0 * sigma, "{} vs {want}", rows[0].estimate);
    }
}
