//! Worked examples checked against small oracles written from scratch here.
#![allow(clippy::needless_range_loop)]

use approx::assert_abs_diff_eq;
use camo::attack::CamoObject;
use camo::bounds::{cij_matrix, one_step_rewards, theorem1_check};
use camo::env::{
    attacker_position_sweep, build_chessboard, build_ring, ChessboardSpec, EnvSpec, RewardRows, RingSpec, RING_TABLE,
};
use camo::mdp::{expected_reward_no_attack, point_mass, push_forward, solve_policy_family, uniform, JointSpace};
use camo::oracle::{brute_force_attack_value, OracleBudget, OracleMode};
use camo::planners::{plan_camouflage, post_move_update, AttackMode};
use camo::{CamouflageScheme, Perception, PerceptionDomain, PerceptionKind, StageMdp};

const LEFT: usize = 0;
const RIGHT: usize = 1;
const STAY: usize = 2;

/// Ring dynamics spelled out by hand: intended move 0.8, opposite 0.2; stay
/// 0.8 with 0.1 to each neighbour.
fn ring_p(s: usize, a: usize) -> [f64; 3] {
    let mut p = [0.0; 3];
    let (l, r) = ((s + 2) % 3, (s + 1) % 3);
    match a {
        LEFT => {
            p[l] = 0.8;
            p[r] = 0.2;
        }
        RIGHT => {
            p[r] = 0.8;
            p[l] = 0.2;
        }
        _ => {
            p[s] = 0.8;
            p[l] = 0.1;
            p[r] = 0.1;
        }
    }
    p
}

/// Reward for moving `prev -> next`; the table row is the destination.
fn ring_r(prev: usize, next: usize) -> f64 {
    RING_TABLE[next][prev]
}

fn ring_er(s: usize, a: usize) -> f64 {
    let p = ring_p(s, a);
    (0..3).map(|x| p[x] * ring_r(s, x)).sum()
}

/// Greedy single-agent policy and values, stage-indexed `0..T`.
fn ring_policy(t_max: usize) -> (Vec<[usize; 3]>, Vec<[f64; 3]>) {
    let mut pol = vec![[0; 3]; t_max];
    let mut val = vec![[0.0; 3]; t_max + 1];
    for t in (0..t_max).rev() {
        for s in 0..3 {
            let q = |a: usize| ring_er(s, a) + (0..3).map(|x| ring_p(s, a)[x] * val[t + 1][x]).sum::<f64>();
            let mut best = (0, q(0));
            for a in 1..3 {
                if q(a) > best.1 + 1e-9 {
                    best = (a, q(a));
                }
            }
            pol[t][s] = best.0;
            val[t][s] = best.1;
        }
    }
    (pol, val)
}

/// Two recipients under a shared rotation chosen to minimize their reward.
fn ring_camouflage_oracle(t_max: usize) -> f64 {
    let (pol, _) = ring_policy(t_max);
    let mut v = [[0.0; 3]; 3];
    for t in (0..t_max).rev() {
        let mut next = [[0.0; 3]; 3];
        for s1 in 0..3 {
            for s2 in 0..3 {
                next[s1][s2] = (0..3)
                    .map(|k| {
                        let a1 = pol[t][(s1 + k) % 3];
                        let a2 = pol[t][(s2 + k) % 3];
                        let (p1, p2) = (ring_p(s1, a1), ring_p(s2, a2));
                        let mut total = 0.0;
                        for x1 in 0..3 {
                            for x2 in 0..3 {
                                total += p1[x1] * p2[x2] * (ring_r(s1, x1) + ring_r(s2, x2) + v[x1][x2]);
                            }
                        }
                        total
                    })
                    .fold(f64::INFINITY, f64::min);
            }
        }
        v = next;
    }
    v.iter().flatten().sum::<f64>() / 9.0
}

/// Per-recipient perception attack: separable, so one agent's value doubles.
fn ring_spa_oracle(t_max: usize) -> f64 {
    let (pol, _) = ring_policy(t_max);
    let mut w = [0.0; 3];
    for t in (0..t_max).rev() {
        let mut next = [0.0; 3];
        for s in 0..3 {
            next[s] = (0..3)
                .map(|seen| {
                    let a = pol[t][seen];
                    ring_er(s, a) + (0..3).map(|x| ring_p(s, a)[x] * w[x]).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
        }
        w = next;
    }
    2.0 * w.iter().sum::<f64>() / 3.0
}

fn assert_close(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_abs_diff_eq!(g, w, epsilon = 1e-15);
    }
}

#[test]
fn ring_values_match_hand_oracle() {
    let (_, val) = ring_policy(5);
    let none = 2.0 * val[0].iter().sum::<f64>() / 3.0;
    let ca = ring_camouflage_oracle(5);
    let spa = ring_spa_oracle(5);
    // frozen from the oracle above
    assert_abs_diff_eq!(none, 87.80072533333, epsilon = 1e-8);
    assert_abs_diff_eq!(ca, 15.541573, epsilon = 1e-6);
    assert_abs_diff_eq!(spa, 14.0779093, epsilon = 1e-6);

    let env = EnvSpec::Ring(RingSpec::default());
    let inst = env.instance(false).unwrap();
    let init = uniform(&inst.space(2));
    for (mode, want) in [(AttackMode::NoAttack, none), (AttackMode::Camouflage, ca), (AttackMode::StatePerception, spa)]
    {
        let run = inst.run(2, &mode, &init).unwrap();
        assert_abs_diff_eq!(*run.trajectory.last().unwrap(), want, epsilon = 1e-9);
    }
}

#[test]
fn ring_rows_and_table() {
    let (mdp, _) = build_ring(&RingSpec::default()).unwrap();
    assert_close(mdp.row(1, 0, RIGHT), &[0.0, 0.8, 0.2]);
    let stay = mdp.row(1, 1, STAY);
    assert_abs_diff_eq!(stay[0], 0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(stay[1], 0.8, epsilon = 1e-15);
    assert_abs_diff_eq!(stay[2], 0.1, epsilon = 1e-15);
    let (origin, _) = build_ring(&RingSpec { reward_rows: RewardRows::Origin, ..RingSpec::default() }).unwrap();
    assert_eq!(origin.reward(0, 1, 1, 0), 10.0);
    assert_eq!(origin.reward(0, 1, 0, 1), 10.6);
    assert_eq!(origin.reward(0, 1, 2, 2), 11.6);
    assert_eq!(mdp.reward(0, 1, 0, 1), 10.0);
    assert_eq!(mdp.reward(0, 1, 1, 0), 10.6);
}

#[test]
fn ring_point_mass_push_forward() {
    let (mdp, _) = build_ring(&RingSpec::default()).unwrap();
    let space = JointSpace::new(1, 3);
    let out = push_forward(&point_mass(&space, &[0]), |_, _| RIGHT, &mdp, &space, 1).unwrap();
    assert_close(&out, &[0.0, 0.8, 0.2]);
}

#[test]
fn greedy_policy_equals_exhaustive_enumeration_at_two_steps() {
    let (mdp, _) = build_ring(&RingSpec { horizon: 2, ..RingSpec::default() }).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    // every deterministic stage policy: 3 actions for each of 3 states, 2 stages
    let mut best = [f64::NEG_INFINITY; 3];
    for code in 0..3usize.pow(6) {
        let act = |t: usize, s: usize| code / 3usize.pow((3 * t + s) as u32) % 3;
        for (start, slot) in best.iter_mut().enumerate() {
            let mut total = 0.0;
            let mut dist = [0.0; 3];
            dist[start] = 1.0;
            for t in 0..2 {
                let mut next = [0.0; 3];
                for s in 0..3 {
                    let p = ring_p(s, act(t, s));
                    for x in 0..3 {
                        total += dist[s] * p[x] * ring_r(s, x);
                        next[x] += dist[s] * p[x];
                    }
                }
                dist = next;
            }
            *slot = slot.max(total);
        }
    }
    for (s, b) in best.iter().enumerate() {
        assert_abs_diff_eq!(policy.value(0, 0, s), *b, epsilon = 1e-12);
    }
}

#[test]
fn single_state_reward_grows_linearly() {
    let mdp = StageMdp::stationary(3, vec![vec![vec![1.0]]], vec![vec![vec![2.0]]], vec!["c".into()], 0).unwrap();
    assert_eq!(expected_reward_no_attack(&mdp, 2, &[1.0]).unwrap(), vec![0.0, 4.0, 8.0, 12.0]);
}

#[test]
fn board_post_layer_matches_successor_enumeration() {
    let spec = ChessboardSpec { q: 2, attackers: vec![(0, 0)], horizon: 3, ..ChessboardSpec::default() };
    let (mdp, scheme) = build_chessboard(&spec).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let ny = scheme.num_appearances();
    let fake = scheme.index_of(&camo::Appearance(vec![3])).unwrap();
    let v_next = [1.0, 2.0, 3.0, 4.0];
    // recipient at (0,1), next to the attacker
    let own = 1;
    for (step, tail) in [(3, [0.0; 4]), (2, v_next)] {
        let layer = post_move_update(&mdp, &policy, &scheme, 1, step, &tail).unwrap();
        let a = policy.action(3, step - 1, own);
        let truth = mdp.true_config();
        let want: f64 = (0..4).map(|x| mdp.row(step, own, a)[x] * (mdp.reward(truth, step, own, x) + tail[x])).sum();
        assert_abs_diff_eq!(layer[own * ny + fake], want, epsilon = 1e-12);
    }
}

#[test]
fn cij_ring_matches_exhaustive_rewards() {
    let (mdp, scheme) = build_ring(&RingSpec::default()).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let (pol, _) = ring_policy(5);
    let states = [0, 1];
    let f: Vec<Vec<f64>> = states.iter().map(|&s| (0..3).map(|k| ring_er(s, pol[4][(s + k) % 3])).collect()).collect();
    let argmin = |v: &[f64]| (0..3).fold(0, |b, k| if v[k] < v[b] { k } else { b });
    let c = cij_matrix(&mdp, &policy, &scheme, 5, &states).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = f[i][argmin(&f[j])] - f[i][argmin(&f[i])];
            assert_abs_diff_eq!(c[i][j], want, epsilon = 1e-12);
        }
    }
    assert_eq!(one_step_rewards(&mdp, &policy, &scheme, 5, &states).unwrap().len(), 2);
}

#[test]
fn identity_only_gap_is_closed() {
    let (mdp, _) = build_ring(&RingSpec::default()).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let scheme = CamouflageScheme::identity_only(3, 1, 0);
    let r = theorem1_check(&mdp, &policy, &scheme, 2, &[0, 2]).unwrap();
    let truthful: f64 = [0, 2].iter().map(|&s| mdp.expected_reward(0, 2, s, policy.action(0, 1, s))).sum();
    assert_abs_diff_eq!(r.o1, truthful, epsilon = 1e-12);
    assert_abs_diff_eq!(r.o2, truthful, epsilon = 1e-12);
    assert!(r.bound >= 0.0 && r.holds);
}

#[test]
fn oracle_agrees_on_truncated_ring() {
    let (mdp, scheme) = build_ring(&RingSpec { horizon: 2, ..RingSpec::default() }).unwrap();
    let policy = solve_policy_family(&mdp).unwrap();
    let init = uniform(&JointSpace::new(2, 3));
    let (_, v) = plan_camouflage(&mdp, &policy, &scheme, 2).unwrap();
    let oracle =
        brute_force_attack_value(&mdp, &policy, &scheme, 2, OracleMode::Camouflage, &init, &OracleBudget::default())
            .unwrap();
    assert_abs_diff_eq!(v.initial_value(&init), oracle, epsilon = 1e-9);
    assert_abs_diff_eq!(oracle, ring_camouflage_oracle(2), epsilon = 1e-9);
}

#[test]
fn sweep_single_placement_and_symmetry() {
    let template = ChessboardSpec { q: 2, attackers: vec![(0, 0)], ..ChessboardSpec::default() };
    let modes = [AttackMode::NoAttack, AttackMode::Camouflage];
    let one = attacker_position_sweep(&template, 2, &modes, Some(vec![vec![(1, 0)]]), None, false).unwrap();
    let direct =
        EnvSpec::Chessboard(ChessboardSpec { attackers: vec![(1, 0)], ..template.clone() }).instance(false).unwrap();
    let init = uniform(&direct.space(2));
    for (k, m) in modes.iter().enumerate() {
        assert_eq!(one.mean[k], direct.run(2, m, &init).unwrap().trajectory);
    }
    // (0,0) and (1,1) mirror each other across the anti-diagonal, which fixes
    // the bonus cell (0,1)
    let all = attacker_position_sweep(&template, 2, &[AttackMode::NoAttack], None, None, false).unwrap();
    assert_eq!(all.placements.len(), 4);
    let at = |cell: (usize, usize)| all.placements.iter().position(|p| p[0] == cell).unwrap();
    let (a, b) = (&all.runs[at((0, 0))][0], &all.runs[at((1, 1))][0]);
    for (x, y) in a.iter().zip(b) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-9);
    }
}

#[test]
fn tabulated_scheme_from_parts() {
    let scheme = CamouflageScheme::new(
        vec![CamoObject { name: "flag".into(), truth: 1, domain: vec![0, 1] }],
        PerceptionKind::Tabulated { own: vec![vec![1, 0], vec![0, 1]], config: vec![0, 0] },
        2,
        1,
        0,
    )
    .unwrap();
    assert_eq!(scheme.identity_index(), 1);
    assert_eq!(scheme.perception_of(0, 0, 0), Perception { own_state: 1, env_config: 0 });
    assert_eq!(PerceptionDomain::truthful().candidates(1, 2, 1, 0), vec![Perception { own_state: 1, env_config: 0 }]);
}
