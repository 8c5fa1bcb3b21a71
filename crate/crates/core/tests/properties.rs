use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_cem::casegen::{random_case, ParamMix, RandomCaseOptions};
use robust_cem::formulations::{
    build_cost_dualized, build_deterministic, build_scenario_aro, build_split_budget, product_vertex_scenarios,
    BuildArtifacts, ScenarioSet, SupportRule,
};
use robust_cem::lp::{self, Backend, Bounds, LpBuilder, LpInstance, Sense, SolverOptions};
use robust_cem::model::{compile_case, compile_system, ParamKind, Portfolio, SystemSpec, TwoStageLp, UncertaintyModel};
use robust_cem::oracle::{brute_force_worst_case, ccg_l1_solve, ccg_solve, inner_recourse_value, rel_diff};
use robust_cem::par::EvalOptions;
use robust_cem::verify::restrict;

/// Feasible by construction (rows hold at a random interior point) and bounded
/// by finite upper bounds on every column.
fn random_lp(seed: u64) -> LpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=20);
    let m = rng.random_range(1..=15);
    let mut b = LpBuilder::new();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
    for (j, &x) in x0.iter().enumerate() {
        let upper = x + rng.random_range(0.0..5.0);
        b.add_col(format!("x{j}"), rng.random_range(-5.0..5.0), Bounds::upper(upper));
    }
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.6) {
                coeffs.push((j, rng.random_range(-3.0..3.0)));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (sense, rhs) = match rng.random_range(0..3) {
            0 => (Sense::Le, act + rng.random_range(0.0..2.0)),
            1 => (Sense::Ge, act - rng.random_range(0.0..2.0)),
            _ => (Sense::Eq, act),
        };
        b.add_row(format!("r{i}"), coeffs, sense, rhs);
    }
    b.build()
}

fn case(seed: u64, mix: ParamMix) -> (TwoStageLp, UncertaintyModel) {
    let opts = RandomCaseOptions {
        mix,
        min_params: 2,
        ..Default::default()
    };
    compile_case(&random_case(seed, &opts)).unwrap()
}

fn obj(art: &BuildArtifacts) -> f64 {
    let r = lp::solve(&art.lp, &SolverOptions::default()).unwrap();
    assert!(r.is_optimal(), "{:?}", r.status);
    r.objective
}

fn le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * a.abs().max(b.abs()).max(1.0)
}

/// Same system with zones and technologies declared in a shuffled order.
fn shuffled(spec: &SystemSpec, seed: u64) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = spec.clone();
    let mut zone_order: Vec<usize> = (0..spec.zones.len()).collect();
    zone_order.shuffle(&mut rng);
    out.zones = zone_order.iter().map(|&z| spec.zones[z].clone()).collect();
    for (s, sl) in out.time_slices.iter_mut().enumerate() {
        sl.demand_mw = zone_order.iter().map(|&z| spec.time_slices[s].demand_mw[z]).collect();
    }
    out.technologies.shuffle(&mut rng);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn strong_duality_on_random_lps(seed in any::<u64>(), highs in any::<bool>()) {
        let inst = random_lp(seed);
        let backend = if highs { Backend::Highs } else { Backend::Embedded };
        let r = lp::solve(&inst, &SolverOptions::with_backend(backend)).unwrap();
        prop_assert!(r.is_optimal());
        let dual = inst.dual_objective(&r.dual);
        prop_assert!(rel_diff(r.objective, dual) <= 1e-7, "{} vs {dual}", r.objective);
        prop_assert!(inst.dual_sign_violation(&r.dual) <= 1e-9);
        prop_assert!(r.primal_residual <= 1e-8);
    }

    #[test]
    fn objective_scaling_scales_the_optimum(seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let inst = random_lp(seed);
        let opts = SolverOptions::with_backend(Backend::Embedded);
        let a = lp::solve(&inst, &opts).unwrap();
        let b = lp::solve(&inst.scaled_objective(lambda), &opts).unwrap();
        prop_assert!(rel_diff(a.objective, b.objective / lambda) <= 1e-8);
        prop_assert!(rel_diff(inst.objective_value(&b.primal), a.objective) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn empty_portfolio_always_has_recourse(seed in 0u64..200, u in prop::collection::vec(0.0f64..=1.0, 4)) {
        let (lp, um) = case(seed, ParamMix::RhsOnly);
        let u: Vec<f64> = u.into_iter().take(um.len()).collect();
        let v = inner_recourse_value(&lp, &um, &Portfolio::empty(&lp), &u, &SolverOptions::default());
        prop_assert!(v.is_ok(), "{v:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn compilation_is_deterministic_and_order_free(seed in any::<u64>(), perm in any::<u64>()) {
        let spec = random_case(seed, &RandomCaseOptions::default());
        let lp = compile_system(&spec).unwrap();
        prop_assert_eq!(&lp, &compile_system(&spec).unwrap());
        let other = compile_system(&shuffled(&spec, perm)).unwrap();
        let a = obj(&build_deterministic(&lp).unwrap());
        let b = obj(&build_deterministic(&other).unwrap());
        prop_assert!(rel_diff(a, b) <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn degenerate_budgets_reduce(seed in any::<u64>()) {
        let (lp, um) = case(seed, ParamMix::Any);
        let det = obj(&build_deterministic(&lp).unwrap());
        prop_assert!(rel_diff(det, obj(&build_scenario_aro(&lp, &um, &ScenarioSet::nominal(um.len())).unwrap())) <= 1e-7);
        let (nc, nr) = (um.count(ParamKind::Cost), um.count(ParamKind::Rhs));
        if nr > 0 {
            let rhs_set = ScenarioSet::over_kind(&um, ParamKind::Rhs, 1, SupportRule::Exact).unwrap();
            let split = obj(&build_split_budget(&lp, &um.clone().with_budgets(0, 0.0, 1), &rhs_set).unwrap());
            let rhs_um = restrict(&um, ParamKind::Rhs);
            let aro = obj(&build_scenario_aro(&lp, &rhs_um, &ScenarioSet::over_all(&rhs_um, 1, SupportRule::Exact).unwrap()).unwrap());
            prop_assert!(rel_diff(split, aro) <= 1e-7, "{split} vs {aro}");
        }
        if nc > 0 {
            let split = obj(&build_split_budget(&lp, &um.clone().with_budgets(0, 1.0, 0), &ScenarioSet::nominal(um.len())).unwrap());
            let dual = obj(&build_cost_dualized(&lp, &restrict(&um, ParamKind::Cost).with_budgets(0, 1.0, 0)).unwrap());
            prop_assert!(rel_diff(split, dual) <= 1e-7, "{split} vs {dual}");
        }
    }

    #[test]
    fn aro_is_monotone_in_gamma(seed in any::<u64>()) {
        let (lp, um) = case(seed, ParamMix::Any);
        let mut last = f64::NEG_INFINITY;
        for gamma in 0..=um.len() {
            let v = obj(&build_scenario_aro(&lp, &um, &ScenarioSet::over_all(&um, gamma, SupportRule::Upto).unwrap()).unwrap());
            prop_assert!(le(last, v, 1e-7), "gamma {gamma}: {last} > {v}");
            last = v;
        }
    }

    #[test]
    fn split_is_monotone_in_each_budget(seed in any::<u64>()) {
        let (lp, um) = case(seed, ParamMix::Any);
        let (nc, nr) = (um.count(ParamKind::Cost), um.count(ParamKind::Rhs));
        prop_assume!(nc > 0 && nr > 0);
        let split = |gr: usize, gc: f64| {
            let set = ScenarioSet::over_kind(&um, ParamKind::Rhs, gr, SupportRule::Upto).unwrap();
            obj(&build_split_budget(&lp, &um.clone().with_budgets(0, gc, gr), &set).unwrap())
        };
        for gr in 0..=nr {
            let mut last = f64::NEG_INFINITY;
            for gc in 0..=nc {
                let v = split(gr, gc as f64);
                prop_assert!(le(last, v, 1e-7), "({gr},{gc}): {last} > {v}");
                last = v;
            }
        }
        for gc in 0..=nc {
            let mut last = f64::NEG_INFINITY;
            for gr in 0..=nr {
                let v = split(gr, gc as f64);
                prop_assert!(le(last, v, 1e-7), "({gr},{gc}): {last} > {v}");
                last = v;
            }
        }
    }

    #[test]
    fn ordering_chain(seed in any::<u64>()) {
        let (lp, um) = case(seed, ParamMix::Any);
        let (nc, nr) = (um.count(ParamKind::Cost), um.count(ParamKind::Rhs));
        prop_assume!(nc > 0 && nr > 0);
        let det = obj(&build_deterministic(&lp).unwrap());
        let rhs_set = ScenarioSet::over_kind(&um, ParamKind::Rhs, 1, SupportRule::Exact).unwrap();
        let split = obj(&build_split_budget(&lp, &um.clone().with_budgets(0, 1.0, 1), &rhs_set).unwrap());
        let product = product_vertex_scenarios(&um, 1, 1, SupportRule::Exact).unwrap();
        let vertices = obj(&build_scenario_aro(&lp, &um, &product).unwrap());
        // Product vertices lie inside the split uncertainty set.
        prop_assert!(le(det, vertices, 1e-7), "{det} > {vertices}");
        prop_assert!(le(vertices, split, 1e-7), "{vertices} > {split}");
    }

    #[test]
    fn cross_method_agreement(seed in any::<u64>()) {
        let eval = EvalOptions::default();
        let (lp, um) = case(seed, ParamMix::Any);
        let gamma = um.len().min(2);
        let set = ScenarioSet::over_all(&um, gamma, SupportRule::Exact).unwrap();
        let aro = obj(&build_scenario_aro(&lp, &um, &set).unwrap());
        let ccg = ccg_solve(&lp, &um, &set, 1e-9, 100, &eval).unwrap();
        prop_assert!(ccg.converged);
        prop_assert!(rel_diff(aro, ccg.objective) <= 1e-6, "{aro} vs {}", ccg.objective);
        for w in ccg.history.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1, "{:?}", ccg.history);
        }

        let (lp, um) = case(seed, ParamMix::CostOnly);
        let um = um.with_budgets(0, 1.0, 0);
        let dual = obj(&build_cost_dualized(&lp, &um).unwrap());
        let ball = ccg_l1_solve(&lp, &um, &ScenarioSet::nominal(um.len()), 1e-10, 200, &eval).unwrap();
        prop_assert!(ball.converged);
        prop_assert!(rel_diff(dual, ball.objective) <= 1e-6, "{dual} vs {}", ball.objective);
        let vertices = obj(&build_scenario_aro(&lp, &um, &ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap()).unwrap());
        prop_assert!(le(vertices, dual, 1e-7));
    }

    #[test]
    fn certificates_reproduce(seed in any::<u64>()) {
        let eval = EvalOptions::default();
        let (lp, um) = case(seed, ParamMix::Any);
        let set = ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap();
        let art = build_scenario_aro(&lp, &um, &set).unwrap();
        let res = lp::solve(&art.lp, &eval.solver).unwrap();
        let p = art.portfolio(&lp, &res, "aro");
        let cert = brute_force_worst_case(&lp, &um, &p, &set, &eval).unwrap();
        let again = inner_recourse_value(&lp, &um, &p, &cert.u_star, &eval.solver).unwrap();
        prop_assert!(rel_diff(cert.value, again.cost) <= 1e-8);
        prop_assert!(rel_diff(cert.value, art.epigraph(&res).unwrap()) <= 1e-7);
    }
}
