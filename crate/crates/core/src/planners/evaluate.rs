use super::{AttackPlan, PerceptionTable, StepKernel};
use crate::attack::CamouflageScheme;
use crate::error::{CamoError, Result};
use crate::mdp::{check_normalized, JointSpace, PolicyFamily, StageMdp};

/// Cumulative expected total reward under `plan`, indices `0..=T`, by exact
/// forward propagation of the joint-state distribution. Stochastic camouflage
/// outcomes of budgeted plans are expanded in full.
pub fn evaluate_plan(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    plan: &AttackPlan,
    n: usize,
    init: &[f64],
) -> Result<Vec<f64>> {
    let space = JointSpace::new(n, mdp.num_states());
    if init.len() != space.size() {
        return Err(CamoError::Shape(format!(
            "initial distribution has {} entries, joint space has {}",
            init.len(),
            space.size()
        )));
    }
    check_normalized(init)?;
    if plan.horizon() != mdp.horizon() {
        return Err(CamoError::Shape(format!("plan covers {} steps, horizon is {}", plan.horizon(), mdp.horizon())));
    }
    let table = PerceptionTable::new(scheme, n);
    let mut traj = Vec::with_capacity(mdp.horizon() + 1);
    traj.push(0.0);
    let mut dist = init.to_vec();
    let mut states = vec![0; n];
    let mut actions = vec![0; n];
    for t in 0..mdp.horizon() {
        let kernel = StepKernel::new(mdp, t + 1);
        let mut next = vec![0.0; space.size()];
        let mut gained = 0.0;
        for (joint, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            space.decode_into(joint, &mut states);
            for (q, percs) in plan.perceptions(t, joint, &states, scheme, &table)? {
                let w = mass * q;
                for (a, p) in actions.iter_mut().zip(&percs) {
                    *a = policy.action(p.env_config, t, p.own_state);
                }
                gained += w * states.iter().zip(&actions).map(|(&s, &a)| kernel.reward(s, a)).sum::<f64>();
                kernel.for_each_successor(&space, &states, &actions, &mut |j, p| next[j] += w * p);
            }
        }
        dist = next;
        traj.push(traj[t] + gained);
    }
    Ok(traj)
}
