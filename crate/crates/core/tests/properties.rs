use camo::attack::CamoObject;
use camo::bounds::{lemma1_gap, theorem1_check};
use camo::env::{build_ring, RingSpec};
use camo::harness::{format_number, random_instance};
use camo::mdp::{push_forward, solve_policy_family, uniform, JointSpace};
use camo::oracle::{brute_force_attack_value, brute_force_budget_value, OracleBudget, OracleMode};
use camo::planners::{
    evaluate_plan, optimize_row, plan_budgeted_camouflage, plan_camouflage, plan_fixed_appearance,
    plan_state_perception, simulate_rollouts, AppearanceMetric, BudgetModel, SolverMode,
};
use camo::{CamouflageScheme, PerceptionDomain, PerceptionKind};
use proptest::prelude::*;

fn slack(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn flat(t: &camo::ValueTable) -> Vec<f64> {
    t.pre.iter().flatten().copied().collect()
}

/// Row-free scheme with the given object domain sizes; truth at position 0.
fn objects_scheme(sizes: &[usize]) -> CamouflageScheme {
    let objects: Vec<CamoObject> = sizes
        .iter()
        .enumerate()
        .map(|(j, &k)| CamoObject { name: format!("o{j}"), truth: 0, domain: (0..k).collect() })
        .collect();
    let ny = sizes.iter().product();
    CamouflageScheme::new(objects, PerceptionKind::Tabulated { own: vec![vec![0]; ny], config: vec![0; ny] }, 1, 1, 0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn planners_match_oracle(seed in any::<u64>()) {
        let inst = random_instance(seed).unwrap();
        let n = inst.recipients;
        let (_, ca) = plan_camouflage(&inst.mdp, &inst.policy, &inst.scheme, n).unwrap();
        let domain = PerceptionDomain::free();
        let (_, spa) = plan_state_perception(&inst.mdp, &inst.policy, n, &domain).unwrap();
        let budget = OracleBudget::default();
        let o_ca = brute_force_attack_value(&inst.mdp, &inst.policy, &inst.scheme, n, OracleMode::Camouflage, &inst.init, &budget).unwrap();
        let o_spa = brute_force_attack_value(
            &inst.mdp, &inst.policy, &inst.scheme, n, OracleMode::StatePerception { domain }, &inst.init, &budget,
        ).unwrap();
        let (a, b) = (ca.initial_value(&inst.init), spa.initial_value(&inst.init));
        prop_assert!((a - o_ca).abs() <= slack(a, o_ca), "camouflage {a} vs {o_ca}");
        prop_assert!((b - o_spa).abs() <= slack(b, o_spa), "perception {b} vs {o_spa}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_budget_step_beats_grid(
        sizes in prop::collection::vec(2usize..=3, 1..=2),
        budget in 0.0f64..4.0,
        eps in prop::sample::select(vec![0.1, 0.5, 1.0]),
        raw in prop::collection::vec(-10.0f64..10.0, 9),
    ) {
        let scheme = objects_scheme(&sizes);
        let row = &raw[..scheme.num_appearances()];
        let model = BudgetModel::new(budget, eps, AppearanceMetric::Discrete).unwrap();
        let exact = optimize_row(row, &scheme, &model, SolverMode::Exact).unwrap();
        let grid = brute_force_budget_value(row, 0, &scheme, &model, 100, &OracleBudget::default()).unwrap();
        prop_assert!(exact.value <= grid + slack(exact.value, grid), "exact {} grid {grid}", exact.value);
        prop_assert!(exact.spend.iter().sum::<f64>() <= budget + 1e-9);
        prop_assert!(exact.success.iter().all(|p| (0.0..=1.0).contains(p)));
        let replay: f64 = exact.outcomes(&scheme).iter().map(|(p, y)| p * row[*y]).sum();
        prop_assert!((replay - exact.value).abs() <= slack(replay, exact.value));
    }

    #[test]
    fn ordering_holds_everywhere(seed in any::<u64>()) {
        let inst = random_instance(seed).unwrap();
        let n = inst.recipients;
        let id = inst.scheme.identity_index();
        let (_, none) = plan_fixed_appearance(&inst.mdp, &inst.policy, &inst.scheme, n, id).unwrap();
        let (_, ca) = plan_camouflage(&inst.mdp, &inst.policy, &inst.scheme, n).unwrap();
        let (_, spa) = plan_state_perception(&inst.mdp, &inst.policy, n, &PerceptionDomain::free()).unwrap();
        for ((s, c), z) in flat(&spa).iter().zip(flat(&ca)).zip(flat(&none)) {
            prop_assert!(*s <= c + slack(*s, c));
            prop_assert!(c <= z + slack(c, z));
        }
    }

    #[test]
    fn budget_monotone_and_saturating(seed in any::<u64>(), eps in prop::sample::select(vec![0.1, 0.5, 1.0])) {
        let inst = random_instance(seed).unwrap();
        let n = inst.recipients;
        let sat = BudgetModel::new(0.0, eps, AppearanceMetric::Discrete).unwrap().saturation(&inst.scheme);
        let mut prev: Option<Vec<f64>> = None;
        for b in [0.0, 0.3 * sat, 0.7 * sat, sat, 3.0 * sat] {
            let model = BudgetModel::new(b, eps, AppearanceMetric::Discrete).unwrap();
            let v = flat(&plan_budgeted_camouflage(&inst.mdp, &inst.policy, &inst.scheme, &model, n).unwrap().1);
            if let Some(p) = &prev {
                for (x, y) in v.iter().zip(p) {
                    prop_assert!(*x <= y + slack(*x, *y));
                }
            }
            prev = Some(v);
        }
        let (_, ca) = plan_camouflage(&inst.mdp, &inst.policy, &inst.scheme, n).unwrap();
        for (x, y) in prev.unwrap().iter().zip(flat(&ca)) {
            prop_assert!((x - y).abs() <= slack(*x, y));
        }
    }

    #[test]
    fn gap_bound_on_random_instances(seed in any::<u64>()) {
        let inst = random_instance(seed).unwrap();
        let space = JointSpace::new(inst.recipients, inst.mdp.num_states());
        for step in 1..=inst.mdp.horizon() {
            for j in 0..space.size() {
                let r = theorem1_check(&inst.mdp, &inst.policy, &inst.scheme, step, &space.decode(j)).unwrap();
                prop_assert!(r.holds);
            }
        }
    }

    #[test]
    fn lemma_gap_bounds(f in (1usize..=4, 1usize..=6).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n)
    })) {
        let r = lemma1_gap(&f).unwrap();
        let d = f[0].len();
        let o1 = (0..d).map(|x| f.iter().map(|g| g[x]).sum::<f64>()).fold(f64::INFINITY, f64::min);
        let o2: f64 = f.iter().map(|g| g.iter().copied().fold(f64::INFINITY, f64::min)).sum();
        prop_assert!((r.o1 - o1).abs() <= 1e-12 && (r.o2 - o2).abs() <= 1e-12);
        prop_assert!(r.holds && r.o2 <= r.o1 + 1e-12 && r.o1 <= r.o2 + r.bound + 1e-9);
        prop_assert!(r.per_function.iter().all(|c| *c >= -1e-12));
    }

    #[test]
    fn forward_evaluation_matches_values(seed in any::<u64>()) {
        let inst = random_instance(seed).unwrap();
        let n = inst.recipients;
        let (plan, v) = plan_camouflage(&inst.mdp, &inst.policy, &inst.scheme, n).unwrap();
        let traj = evaluate_plan(&inst.mdp, &inst.policy, &inst.scheme, &plan, n, &inst.init).unwrap();
        let want = v.initial_value(&inst.init);
        prop_assert!((traj.last().unwrap() - want).abs() <= slack(want, want));
    }

    #[test]
    fn push_forward_keeps_mass(seed in any::<u64>()) {
        let inst = random_instance(seed).unwrap();
        let space = JointSpace::new(inst.recipients, inst.mdp.num_states());
        let out = push_forward(&inst.init, |i, s| (i + s) % inst.mdp.num_actions(), &inst.mdp, &space, 1).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn joint_index_round_trip(agents in 1usize..=4, states in 1usize..=5, pick in any::<u64>()) {
        let space = JointSpace::new(agents, states);
        let idx = (pick % space.size() as u64) as usize;
        prop_assert_eq!(space.encode(&space.decode(idx)), idx);
    }

    #[test]
    fn formatted_numbers_round_trip(x in -1e6f64..1e6) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1e-3));
    }
}

#[test]
fn ring_rollouts_agree_with_exact_values() {
    let (mdp, scheme) = build_ring(&RingSpec::default()).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let init = uniform(&JointSpace::new(2, 3));
    let plans = [
        plan_fixed_appearance(&mdp, &policy, &scheme, 2, 0).unwrap(),
        plan_camouflage(&mdp, &policy, &scheme, 2).unwrap(),
        plan_state_perception(&mdp, &policy, 2, &PerceptionDomain::free()).unwrap(),
    ];
    for (plan, values) in &plans {
        let stats = simulate_rollouts(&mdp, &policy, &scheme, plan, 2, &init, 100_000, 5).unwrap();
        let exact = values.initial_value(&init);
        assert!((stats.mean - exact).abs() <= 4.0 * stats.std_error, "{} vs {exact}", stats.mean);
    }
}

#[test]
fn half_probability_coin_frequency() {
    // one step, actions stay/switch; a swapped view makes the recipient leave
    // the good state or stay out of it
    let mdp = camo::StageMdp::stationary(
        1,
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
        vec![vec![vec![0.0, 4.0], vec![0.0, 4.0]]],
        vec!["c".into()],
        0,
    )
    .unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let scheme = CamouflageScheme::new(
        vec![CamoObject { name: "flag".into(), truth: 0, domain: vec![0, 1] }],
        PerceptionKind::Tabulated { own: vec![vec![0, 1], vec![1, 0]], config: vec![0, 0] },
        2,
        1,
        0,
    )
    .unwrap();
    // C = 1 + 1, B = 1
    let model = BudgetModel::new(1.0, 1.0, AppearanceMetric::Discrete).unwrap();
    let (plan, _) = plan_budgeted_camouflage(&mdp, &policy, &scheme, &model, 1).unwrap();
    let init = uniform(&JointSpace::new(1, 2));
    let stats = simulate_rollouts(&mdp, &policy, &scheme, &plan, 1, &init, 40_000, 9).unwrap();
    let rate = stats.success_rate().unwrap();
    let se = (0.25 / stats.attempts as f64).sqrt();
    assert!((rate - 0.5).abs() <= 4.0 * se, "rate {rate}");
}
