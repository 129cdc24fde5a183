mod common;

use common::*;
use proptest::prelude::*;
use qcl_core::eptas::{eptas, for_each_plan, jumps, load, reconstruct_order, solve_ip_th, star_lp_value};
use qcl_core::instance::{from_pricing, from_prophet, random_instance, support, CostDist, Curve, EdgeWeights, GeneratorParams, Job, Objective, PricingSpec, ProphetSpec, QModel, RModel, Worker};
use qcl_core::lp::{check_lp_m_feasibility, relaxed_dual_violation, ColgenOptions};
use qcl_core::prcrs::{prcrs_multi_action_run, sample_trace, Decision, Scheme, TrialKeys};
use qcl_core::rounding::{BitSource, RunKeys, SeededBits};
use qcl_core::*;
use std::collections::HashSet;

fn patience() -> impl Strategy<Value = Patience> {
    prop_oneof![
        Just(Patience::Finite(1)),
        Just(Patience::Finite(2)),
        Just(Patience::Finite(3)),
        Just(Patience::Infinite)
    ]
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, 1usize..=3, 1usize..=2, any::<u64>(), 0.0f64..0.5, prop::bool::ANY).prop_map(
        |(nu, nv, na, seed, lo, sparse)| {
            let q_model = if sparse {
                QModel::Sparse { density: 0.6, lo, hi: 1.0 }
            } else {
                QModel::Uniform { lo, hi: 1.0 }
            };
            let p = GeneratorParams {
                n_offline: nu,
                n_online: nv,
                n_actions: na,
                patience: vec![Patience::Finite(1), Patience::Finite(2), Patience::Infinite],
                online_patience: None,
                q_model,
                r_model: RModel::Uniform { max: 1.0 },
            };
            random_instance(seed, &p).unwrap()
        },
    )
}

fn star() -> impl Strategy<Value = StarInstance> {
    (1usize..=6, 1usize..=2, patience(), any::<u64>())
        .prop_map(|(n, na, l, seed)| StarInstance::of_online(&random_star_instance(seed, n, na, vec![l]), 0))
}

/// Feasible contention resolution input: per element sum_a x <= 1, total x
/// within patience, total p x <= 1.
fn prcrs_input() -> impl Strategy<Value = PrcrsInput> {
    (1usize..=6, 1usize..=3, patience()).prop_flat_map(|(n, na, l)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, na), n),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, na), n),
        )
            .prop_map(move |(p, mut x)| {
                for xi in &mut x {
                    let s: f64 = xi.iter().sum();
                    if s > 1.0 {
                        xi.iter_mut().for_each(|v| *v /= s);
                    }
                }
                let total: f64 = x.iter().flatten().sum();
                let success: f64 = x.iter().zip(&p).map(|(xi, pi)| xi.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>()).sum();
                let mut scale = 1.0f64;
                if let Patience::Finite(l) = l {
                    scale = scale.min(l as f64 / total.max(1e-300));
                }
                scale = scale.min(1.0 / success.max(1e-300)) * (1.0 - 1e-12);
                x.iter_mut().flatten().for_each(|v| *v *= scale.min(1.0));
                PrcrsInput { patience: l, p, x }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_json_round_trip(inst in instance()) {
        prop_assert!(inst.validate().is_empty());
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn pricing_reduction_validates(
        values in prop::collection::vec(1.0f64..10.0, 1..3),
        nw in 1usize..3,
        pts in prop::collection::vec((0.0f64..5.0, 0.0f64..=1.0), 1..4),
        welfare in prop::bool::ANY,
    ) {
        let jobs: Vec<Job> = values.iter().enumerate().map(|(k, &v)| Job { id: format!("j{k}"), value: v, patience: Patience::Finite(2) }).collect();
        let workers: Vec<Worker> = (0..nw).map(|k| Worker { id: format!("w{k}"), patience: Patience::Finite(1) }).collect();
        let mut curves = vec![];
        let mut costs = vec![];
        for j in 0..jobs.len() {
            for w in 0..nw {
                curves.push(Curve { job: j, worker: w, points: pts.clone() });
                // cheapest cost 0 so every payment has a conditional cost
                costs.push(CostDist { job: j, worker: w, atoms: vec![(0.0, 0.5), (3.0, 0.5)] });
            }
        }
        let objective = if welfare { Objective::Welfare } else { Objective::Revenue };
        let inst = from_pricing(&PricingSpec { jobs, workers, curves, costs, objective }).unwrap();
        prop_assert!(inst.validate().is_empty());
    }

    #[test]
    fn prophet_reduction_validates_and_keeps_tails(
        atoms in prop::collection::vec((0.0f64..10.0, 0.01f64..1.0), 1..5),
    ) {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(w, p)| (w, p / total)).collect();
        let spec = ProphetSpec {
            offline: vec!["u".into()],
            online: vec!["v".into()],
            offline_patience: vec![Patience::Finite(1)],
            online_patience: vec![Patience::Finite(1)],
            weights: vec![EdgeWeights { u: 0, v: 0, atoms: atoms.clone() }],
        };
        let inst = from_prophet(&spec).unwrap();
        prop_assert!(inst.validate().is_empty());
        // threshold at support point k accepts exactly the atoms >= it
        for (k, &(tau, _)) in support(&atoms).iter().enumerate() {
            let tail: f64 = atoms.iter().filter(|a| a.0 >= tau).map(|a| a.1).sum();
            prop_assert!((inst.q(0, 0, k) - tail).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_chain(inst in instance()) {
        let b = Budgets::default();
        let opt = opt_dp(&inst, &b).unwrap().value;
        let lpc = solve_lp_c_explicit(&inst, &b).unwrap();
        let lpm = solve_lp_m(&inst).unwrap().value;
        prop_assert!(lpc.solution.objective >= opt - 1e-9);
        prop_assert!(lpc.solution.objective <= lpm + 1e-9);
        prop_assert!(check_marginal_feasibility(&lpc.solution.marginals, &inst).is_empty());
        prop_assert!(check_lp_m_feasibility(&lpc.solution.marginals, &inst).is_empty());
        for v in 0..inst.n_online() {
            prop_assert!(lpc.solution.mass(v) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn colgen_agrees_with_explicit(inst in instance()) {
        let b = Budgets::default();
        let explicit = solve_lp_c_explicit(&inst, &b).unwrap().solution.objective;
        let cg = solve_lp_c_colgen(&inst, &ColgenOptions::exact(0.01)).unwrap();
        prop_assert!((cg.solution.objective - explicit).abs() <= 0.01 * explicit + 1e-6);
        prop_assert!(relaxed_dual_violation(&inst, &cg.duals, 0.01, &b).unwrap() <= 1e-7);
    }

    #[test]
    fn opt_is_monotone_in_rewards(inst in instance(), pick in any::<prop::sample::Index>(), bump in 0.0f64..2.0) {
        let b = Budgets::default();
        let before = opt_dp(&inst, &b).unwrap().value;
        let k = pick.index(inst.n_pairs());
        let (nv, na) = (inst.n_online(), inst.n_actions());
        let (u, v, a) = (k / (nv * na), (k / na) % nv, k % na);
        let mut up = inst.clone();
        up.set(u, v, a, inst.q(u, v, a), inst.r(u, v, a) + bump);
        prop_assert!(opt_dp(&up, &b).unwrap().value >= before - 1e-12);
    }

    #[test]
    fn star_oracles_agree(s in star()) {
        let b = Budgets::default();
        let brute = star_opt_bruteforce(&s, &b).unwrap();
        let dp = opt_dp(&s.to_instance(), &b).unwrap().value;
        prop_assert!((brute.value - dp).abs() < 1e-9);
        let fv = star_future_values(&s, &brute.edges);
        prop_assert!((fv.values[0] - brute.value).abs() < 1e-12);
    }

    #[test]
    fn prcrs_traces_are_valid_and_deterministic(input in prcrs_input(), seed in any::<u64>(), greedy in prop::bool::ANY) {
        prop_assert!(input.validate().is_empty());
        let family = if greedy { SchemeFamily::Greedy } else { SchemeFamily::Attenuated };
        let scheme = Scheme::for_input(&input, family);
        let keys = TrialKeys::new(seed);
        for t in 0..50 {
            let tr = sample_trace(&input, &scheme, &keys, t);
            prop_assert!(tr.check(input.patience).is_ok(), "{:?}", tr.check(input.patience));
            prop_assert_eq!(&tr, &sample_trace(&input, &scheme, &keys, t));
        }
    }

    #[test]
    fn rounding_runs_are_valid(inst in instance(), seed in any::<u64>()) {
        let b = Budgets::default();
        let lp = solve_lp_c_explicit(&inst, &b).unwrap().solution;
        for family in [SchemeFamily::Attenuated, SchemeFamily::Greedy] {
            let r = Rounder::new(&inst, &lp, family);
            let keys = RunKeys::new(seed);
            for t in 0..40 {
                let out = r.full_trial(&keys, t);
                prop_assert!(out.check(&inst, true).is_ok(), "{:?}", out.check(&inst, true));
                prop_assert!(r.replay_check(&keys, t).is_ok());
                prop_assert_eq!(&out, &r.full_trial(&keys, t));
                let relaxed = r.relaxed_trial(&keys, t);
                prop_assert!(relaxed.check(&inst, false).is_ok());
                // each offline scheme, run on its own, queries exactly the
                // online vertices the rounding really queried from it
                for u in 0..inst.n_offline() {
                    let mut order = vec![];
                    let mut sugg = vec![None; inst.n_online()];
                    for &(uu, v, a) in &out.suggestions {
                        if uu == u {
                            order.push(v);
                            sugg[v] = Some(a);
                        }
                    }
                    let mut bits = SeededBits::new(&inst, &keys, t);
                    let mut att = SeededBits::new(&inst, &keys, t);
                    let tr = prcrs_multi_action_run(r.scheme(u), &order, &sugg, |v, a| bits.real(u, v, a), |v| att.attenuation(u, v));
                    let solo: HashSet<usize> = (0..inst.n_online()).filter(|&v| matches!(tr.decisions[v], Decision::Query(_))).collect();
                    let real: HashSet<usize> = out.queries.iter().filter(|q| q.real && q.u == u).map(|q| q.v).collect();
                    prop_assert_eq!(solo, real);
                }
            }
        }
    }

    #[test]
    fn eptas_output_is_a_valid_policy(s in star()) {
        let b = Budgets::default();
        let opt = star_opt_bruteforce(&s, &b).unwrap().value;
        let got = eptas(&s, 0.5, &b).unwrap();
        let p = &got.policy;
        let distinct: HashSet<usize> = p.edges.iter().copied().collect();
        prop_assert_eq!(distinct.len(), p.edges.len());
        prop_assert!(p.edges.len() <= s.cap());
        prop_assert!(p.value <= opt + 1e-9);
        prop_assert!(p.value >= 0.0);
        let fv = star_future_values(&s, &p.edges);
        prop_assert_eq!(fv.values[0], p.value);
        prop_assert!(got.lp_value >= opt - 1e-9);
        prop_assert!((star_lp_value(&s).unwrap() - got.lp_value).abs() < 1e-12);
    }

    #[test]
    fn jump_census_of_optima(s in star(), inv in 1usize..=4) {
        let eps = 1.0 / inv as f64;
        let opt = star_opt_bruteforce(&s, &Budgets::default()).unwrap();
        let fv = star_future_values(&s, &opt.edges);
        prop_assert!(jumps(&fv.values, eps).len() <= inv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// For every feasible guess, the reconstructed policy decomposes
    /// telescopically and is at least the bucket base plus the load of its
    /// first ahead-of-schedule edge.
    #[test]
    fn reconstructed_policies_meet_the_schedule_bounds(s in (1usize..=4, 1usize..=2, patience(), any::<u64>())
        .prop_map(|(n, na, l, seed)| StarInstance::of_online(&random_star_instance(seed, n, na, vec![l]), 0))) {
        let b = Budgets::default();
        let eps = 0.5;
        let lp = star_lp_value(&s).unwrap();
        if lp <= 0.0 {
            return Ok(());
        }
        for k in 0..=2 {
            for_each_plan(lp, eps, k, |plan| {
                let Some(asg) = solve_ip_th(plan, &s, &b)? else { return Ok(()) };
                let order = reconstruct_order(&asg, plan);
                let fv = star_future_values(&s, &order);
                let r = &fv.values;
                for i in 0..order.len() {
                    let tele = r[i + 1] + (0..=i).map(|j| r[j] - r[j + 1]).sum::<f64>();
                    assert!((tele - r[0]).abs() < 1e-12);
                }
                let bucket = |pos: usize| asg.bucket[order[pos]].unwrap();
                if let Some(i_min) = (0..order.len()).find(|&i| r[i + 1] >= plan.base_value(bucket(i))) {
                    let base = plan.base_value(bucket(i_min));
                    assert!(r[i_min] >= base + load(&s, order[i_min], base) - 1e-12);
                }
                Ok(())
            }).unwrap();
        }
    }
}
