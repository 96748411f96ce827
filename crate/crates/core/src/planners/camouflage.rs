use rayon::prelude::*;

use super::{AttackPlan, PerceptionTable, StepKernel, ValueTable};
use crate::attack::CamouflageScheme;
use crate::error::{CamoError, Result};
use crate::mdp::{JointSpace, PolicyFamily, StageMdp};

/// Move-phase update of step `step`: `V_{step-0.5}(s, Y)` from `V_step`.
///
/// Each agent acts on its own perception under `Y` using the policy of the
/// time index preceding the move; rewards come from the true configuration.
/// Layout of the result is `joint * num_appearances + y`.
pub fn post_move_update(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    n: usize,
    step: usize,
    v_next: &[f64],
) -> Result<Vec<f64>> {
    let space = JointSpace::new(n, mdp.num_states());
    if v_next.len() != space.size() {
        return Err(CamoError::Shape(format!(
            "V_{step} has {} entries, joint space has {}",
            v_next.len(),
            space.size()
        )));
    }
    if step == 0 || step > mdp.horizon() {
        return Err(CamoError::Shape(format!("step {step} outside 1..={}", mdp.horizon())));
    }
    let table = PerceptionTable::new(scheme, n);
    let kernel = StepKernel::new(mdp, step);
    Ok(post_layer(policy, &table, &kernel, &space, step, v_next, None))
}

/// Post layer restricted to `only` (if given), other entries left at +inf.
pub(super) fn post_layer(
    policy: &PolicyFamily,
    table: &PerceptionTable,
    kernel: &StepKernel,
    space: &JointSpace,
    step: usize,
    v_next: &[f64],
    only: Option<usize>,
) -> Vec<f64> {
    let ny = table.num_appearances;
    let n = space.agents();
    let t = step - 1;
    let mut layer = vec![f64::INFINITY; space.size() * ny];
    layer.par_chunks_mut(ny).enumerate().for_each(|(joint, row)| {
        let mut states = vec![0; n];
        let mut actions = vec![0; n];
        space.decode_into(joint, &mut states);
        let ys = match only {
            Some(y) => y..y + 1,
            None => 0..ny,
        };
        for y in ys {
            for (i, a) in actions.iter_mut().enumerate() {
                let p = table.get(y, i, states[i]);
                *a = policy.action(p.env_config, t, p.own_state);
            }
            row[y] = kernel.joint_value(space, &states, &actions, v_next);
        }
    });
    layer
}

fn argmin_first(row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in row.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Optimal shared-appearance attack:
/// `V_{t-1}(s) = min_Y V_{t-0.5}(s, Y)`, first minimizer in enumeration order.
pub fn plan_camouflage(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    n: usize,
) -> Result<(AttackPlan, ValueTable)> {
    backward(mdp, policy, scheme, n, None)
}

/// Always shows appearance `y` (the identity index gives the no-attack plan).
pub fn plan_fixed_appearance(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    n: usize,
    y: usize,
) -> Result<(AttackPlan, ValueTable)> {
    if y >= scheme.num_appearances() {
        return Err(CamoError::OutOfDomain(format!("appearance index {y}")));
    }
    backward(mdp, policy, scheme, n, Some(y))
}

fn backward(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    n: usize,
    only: Option<usize>,
) -> Result<(AttackPlan, ValueTable)> {
    let ny = scheme.num_appearances();
    if ny == 0 {
        return Err(CamoError::InvalidScheme("empty appearance set".into()));
    }
    let space = JointSpace::new(n, mdp.num_states());
    let horizon = mdp.horizon();
    let table = PerceptionTable::new(scheme, n);
    let mut pre = vec![Vec::new(); horizon + 1];
    let mut post = vec![Vec::new(); horizon];
    let mut choices = vec![Vec::new(); horizon];
    pre[horizon] = vec![0.0; space.size()];
    for step in (1..=horizon).rev() {
        let kernel = StepKernel::new(mdp, step);
        let layer = post_layer(policy, &table, &kernel, &space, step, &pre[step], only);
        let (picks, values): (Vec<usize>, Vec<f64>) = layer.chunks(ny).map(argmin_first).unzip();
        choices[step - 1] = picks;
        pre[step - 1] = values;
        post[step - 1] = layer;
    }
    Ok((
        AttackPlan::Camouflage { choices },
        ValueTable { horizon, num_joint: space.size(), num_appearances: ny, pre, post },
    ))
}
