use rayon::prelude::*;

use super::{AttackPlan, StepKernel, ValueTable};
use crate::attack::{Perception, PerceptionDomain};
use crate::error::{CamoError, Result};
use crate::mdp::{JointSpace, PolicyFamily, StageMdp};

fn candidates_per_state(mdp: &StageMdp, domain: &PerceptionDomain) -> Result<Vec<Vec<Perception>>> {
    let lists: Vec<Vec<Perception>> = (0..mdp.num_states())
        .map(|s| domain.candidates(s, mdp.num_states(), mdp.num_configs(), mdp.true_config()))
        .collect();
    if lists.iter().any(Vec::is_empty) {
        return Err(CamoError::EmptyDomain);
    }
    Ok(lists)
}

/// Free per-agent delusions. Agents move independently and rewards add, so
/// the joint minimization splits into one single-agent recursion
/// `v_{t-1}(s) = min_d [r(s, pi_{t-1}(d)) + E v_t(s')]` and
/// `V_t(s_1..s_n) = sum_i v_t(s_i)`.
pub fn plan_state_perception(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    n: usize,
    domain: &PerceptionDomain,
) -> Result<(AttackPlan, ValueTable)> {
    let cands = candidates_per_state(mdp, domain)?;
    let ns = mdp.num_states();
    let horizon = mdp.horizon();
    let mut single = vec![vec![0.0; ns]; horizon + 1];
    let mut choices = vec![Vec::new(); horizon];
    for step in (1..=horizon).rev() {
        let kernel = StepKernel::new(mdp, step);
        let t = step - 1;
        let mut row = Vec::with_capacity(ns);
        let mut picks = Vec::with_capacity(ns);
        for (s, list) in cands.iter().enumerate() {
            let mut best = (list[0], f64::INFINITY);
            for &d in list {
                let a = policy.action(d.env_config, t, d.own_state);
                let v = kernel.reward(s, a)
                    + kernel.successors(s, a).iter().map(|&(x, p)| p * single[step][x]).sum::<f64>();
                if v < best.1 {
                    best = (d, v);
                }
            }
            picks.push(best.0);
            row.push(best.1);
        }
        single[t] = row;
        choices[t] = picks;
    }
    let space = JointSpace::new(n, ns);
    let pre = single
        .iter()
        .map(|v| {
            let mut states = vec![0; n];
            (0..space.size())
                .map(|j| {
                    space.decode_into(j, &mut states);
                    states.iter().map(|&s| v[s]).sum()
                })
                .collect()
        })
        .collect();
    Ok((
        AttackPlan::StatePerception { choices },
        ValueTable { horizon, num_joint: space.size(), num_appearances: 0, pre, post: Vec::new() },
    ))
}

/// Non-factorized variant: minimizes over the full product of per-agent
/// perception domains at every joint state. Exponential in `n`; meant for
/// cross-checking the factorized planner on small instances.
pub fn plan_state_perception_joint(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    n: usize,
    domain: &PerceptionDomain,
) -> Result<(AttackPlan, ValueTable)> {
    let cands = candidates_per_state(mdp, domain)?;
    let space = JointSpace::new(n, mdp.num_states());
    let horizon = mdp.horizon();
    let mut pre = vec![Vec::new(); horizon + 1];
    let mut choices = vec![Vec::new(); horizon];
    pre[horizon] = vec![0.0; space.size()];
    for step in (1..=horizon).rev() {
        let kernel = StepKernel::new(mdp, step);
        let t = step - 1;
        let next = &pre[step];
        let results: Vec<(Vec<Perception>, f64)> = (0..space.size())
            .into_par_iter()
            .map(|joint| {
                let states = space.decode(joint);
                let lists: Vec<&Vec<Perception>> = states.iter().map(|&s| &cands[s]).collect();
                let mut digits = vec![0usize; n];
                let mut actions = vec![0usize; n];
                let mut best: Option<(Vec<Perception>, f64)> = None;
                loop {
                    for i in 0..n {
                        let d = lists[i][digits[i]];
                        actions[i] = policy.action(d.env_config, t, d.own_state);
                    }
                    let v = kernel.joint_value(&space, &states, &actions, next);
                    if best.as_ref().is_none_or(|b| v < b.1) {
                        best = Some(((0..n).map(|i| lists[i][digits[i]]).collect(), v));
                    }
                    // advance mixed-radix counter, last agent fastest
                    let mut i = n;
                    loop {
                        if i == 0 {
                            return best.expect("candidate lists are nonempty");
                        }
                        i -= 1;
                        digits[i] += 1;
                        if digits[i] < lists[i].len() {
                            break;
                        }
                        digits[i] = 0;
                    }
                }
            })
            .collect();
        let (picks, values): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        choices[t] = picks;
        pre[t] = values;
    }
    Ok((
        AttackPlan::JointStatePerception { choices },
        ValueTable { horizon, num_joint: space.size(), num_appearances: 0, pre, post: Vec::new() },
    ))
}
