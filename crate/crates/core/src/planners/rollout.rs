use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{AttackPlan, PerceptionTable, StepKernel};
use crate::attack::{Appearance, CamouflageScheme, Perception};
use crate::error::{CamoError, Result};
use crate::mdp::{check_normalized, JointSpace, PolicyFamily, StageMdp};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutStats {
    pub episodes: u64,
    pub mean: f64,
    pub std_error: f64,
    /// Camouflage attempts with nonzero spend (budgeted plans only).
    pub attempts: u64,
    pub successes: u64,
}

impl RolloutStats {
    pub fn success_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

/// Monte Carlo estimate of the plan's total reward. Episode `e` draws from a
/// ChaCha8 stream `e` seeded with `seed`, so results do not depend on thread
/// scheduling.
#[allow(clippy::too_many_arguments)]
pub fn simulate_rollouts(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    plan: &AttackPlan,
    n: usize,
    init: &[f64],
    episodes: u64,
    seed: u64,
) -> Result<RolloutStats> {
    if episodes == 0 {
        return Err(CamoError::config("episodes", "must be at least 1"));
    }
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
    let start = WeightedIndex::new(init).map_err(|e| CamoError::Shape(e.to_string()))?;
    let table = PerceptionTable::new(scheme, n);
    let kernels: Vec<StepKernel> = (1..=mdp.horizon()).map(|step| StepKernel::new(mdp, step)).collect();
    let sim = Sim { policy, scheme, plan, table: &table, kernels: &kernels, space: &space };

    let results = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e);
            let joint = start.sample(&mut rng);
            sim.episode(joint, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let count = results.len() as f64;
    let mean = results.iter().map(|r| r.0).sum::<f64>() / count;
    let var =
        if results.len() > 1 { results.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (count - 1.0) } else { 0.0 };
    Ok(RolloutStats {
        episodes,
        mean,
        std_error: (var / count).sqrt(),
        attempts: results.iter().map(|r| r.1).sum(),
        successes: results.iter().map(|r| r.2).sum(),
    })
}

struct Sim<'a> {
    policy: &'a PolicyFamily,
    scheme: &'a CamouflageScheme,
    plan: &'a AttackPlan,
    table: &'a PerceptionTable,
    kernels: &'a [StepKernel],
    space: &'a JointSpace,
}

impl Sim<'_> {
    /// Returns (total reward, attempts, successes).
    fn episode(&self, start: usize, rng: &mut ChaCha8Rng) -> Result<(f64, u64, u64)> {
        let n = self.space.agents();
        let mut states = self.space.decode(start);
        let mut joint = start;
        let (mut total, mut attempts, mut successes) = (0.0, 0, 0);
        for (t, kernel) in self.kernels.iter().enumerate() {
            let percs: Vec<Perception> = match self.plan {
                AttackPlan::Budgeted { choices } => {
                    let d =
                        choices.get(t).and_then(|c| c.get(joint)).ok_or(CamoError::PlanMismatch { t, state: joint })?;
                    let mut shown = Vec::with_capacity(d.targets.len());
                    for (j, obj) in self.scheme.objects.iter().enumerate() {
                        let mut value = obj.truth;
                        if d.targets[j] != obj.truth && d.success[j] > 0.0 {
                            attempts += 1;
                            if rng.gen::<f64>() < d.success[j] {
                                successes += 1;
                                value = d.targets[j];
                            }
                        }
                        shown.push(value);
                    }
                    let y =
                        self.scheme.index_of(&Appearance(shown)).ok_or(CamoError::PlanMismatch { t, state: joint })?;
                    (0..n).map(|i| self.table.get(y, i, states[i])).collect()
                }
                _ => {
                    let mut out = self.plan.perceptions(t, joint, &states, self.scheme, self.table)?;
                    out.swap_remove(0).1
                }
            };
            for i in 0..n {
                let p = percs[i];
                let a = self.policy.action(p.env_config, t, p.own_state);
                total += kernel.reward(states[i], a);
                states[i] = sample(kernel.successors(states[i], a), rng);
            }
            joint = self.space.encode(&states);
        }
        Ok((total, attempts, successes))
    }
}

fn sample(succ: &[(usize, f64)], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(next, p) in succ {
        acc += p;
        if u < acc {
            return next;
        }
    }
    succ.last().map_or(0, |s| s.0)
}
