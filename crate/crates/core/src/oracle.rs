//! Brute-force evaluators for certifying the planners on tiny instances.
//!
//! Nothing here calls into the planners: the attack value is an expectimin
//! search over the full history tree, and the budgeted step is a dense grid
//! over spends.

use serde::{Deserialize, Serialize};

use crate::attack::{Appearance, CamouflageScheme, Distortion, Perception, PerceptionDomain};
use crate::error::{CamoError, Result};
use crate::mdp::{PolicyFamily, StageMdp};
use crate::planners::BudgetModel;

/// Caps keeping exhaustive enumeration tractable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_states: usize,
    pub max_agents: usize,
    pub max_horizon: usize,
    pub max_appearances: usize,
    pub max_resolution: usize,
    /// Upper limit on the estimated number of visited nodes.
    pub max_nodes: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_states: 4, max_agents: 3, max_horizon: 3, max_appearances: 16, max_resolution: 400, max_nodes: 5e7 }
    }
}

impl OracleBudget {
    fn check(&self, field: &str, value: usize, cap: usize) -> Result<()> {
        if value > cap {
            return Err(CamoError::config(field, format!("{value} exceeds the oracle cap of {cap}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMode {
    /// One shared appearance per node.
    Camouflage,
    /// One perception per agent per node, drawn from the domain.
    StatePerception { domain: PerceptionDomain },
}

struct Tree<'a> {
    mdp: &'a StageMdp,
    policy: &'a PolicyFamily,
    scheme: &'a CamouflageScheme,
    mode: OracleMode,
    n: usize,
}

impl Tree<'_> {
    /// Per-agent perception lists, one entry per attacker choice.
    fn choices(&self, states: &[usize]) -> Vec<Vec<Perception>> {
        match self.mode {
            OracleMode::Camouflage => (0..self.scheme.num_appearances())
                .map(|y| {
                    let shown = self.scheme.appearance(y);
                    (0..self.n)
                        .map(|i| {
                            crate::attack::perceive(self.scheme, &shown, states, i).expect("enumerated appearance")
                        })
                        .collect()
                })
                .collect(),
            OracleMode::StatePerception { domain } => {
                let per_agent: Vec<Vec<Perception>> = states.iter().map(|&s| self.options(domain, s)).collect();
                let mut out = vec![Vec::new()];
                for opts in &per_agent {
                    out = out
                        .into_iter()
                        .flat_map(|prefix: Vec<Perception>| {
                            opts.iter().map(move |&o| {
                                let mut v = prefix.clone();
                                v.push(o);
                                v
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    fn options(&self, domain: PerceptionDomain, own: usize) -> Vec<Perception> {
        let mut out = Vec::new();
        let configs = match domain.config {
            Distortion::Truthful => vec![self.mdp.true_config()],
            Distortion::Free => (0..self.mdp.num_configs()).collect(),
        };
        for c in configs {
            match domain.own {
                Distortion::Truthful => out.push(Perception { own_state: own, env_config: c }),
                Distortion::Free => {
                    out.extend((0..self.mdp.num_states()).map(|s| Perception { own_state: s, env_config: c }))
                }
            }
        }
        out
    }

    /// Minimum expected reward-to-go from `states` before the attack of step
    /// `t + 1`.
    fn value(&self, t: usize, states: &[usize]) -> f64 {
        if t == self.mdp.horizon() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for percs in self.choices(states) {
            let actions: Vec<usize> = percs.iter().map(|p| self.policy.action(p.env_config, t, p.own_state)).collect();
            let v = self.branch(t, states, &actions, 0, 1.0, 0.0, &mut vec![0; self.n]);
            best = best.min(v);
        }
        best
    }

    /// Expectation over every combination of agent successors.
    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        t: usize,
        states: &[usize],
        actions: &[usize],
        agent: usize,
        prob: f64,
        reward: f64,
        next: &mut [usize],
    ) -> f64 {
        if agent == self.n {
            return prob * (reward + self.value(t + 1, next));
        }
        let step = t + 1;
        let c = self.mdp.true_config();
        let row = self.mdp.row(step, states[agent], actions[agent]);
        let mut total = 0.0;
        for (sp, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[agent] = sp;
            let r = self.mdp.reward(c, step, states[agent], sp);
            total += self.branch(t, states, actions, agent + 1, prob * p, reward + r, next);
        }
        total
    }
}

/// Exact minimum expected total reward over every deterministic attack
/// policy (as a function of the full history), averaged over `init` (joint
/// index, agent 0 most significant).
pub fn brute_force_attack_value(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    n: usize,
    mode: OracleMode,
    init: &[f64],
    budget: &OracleBudget,
) -> Result<f64> {
    let ns = mdp.num_states();
    budget.check("num_states", ns, budget.max_states)?;
    budget.check("recipients", n, budget.max_agents)?;
    budget.check("horizon", mdp.horizon(), budget.max_horizon)?;
    budget.check("appearances", scheme.num_appearances(), budget.max_appearances)?;
    let size = ns.pow(n as u32);
    if init.len() != size {
        return Err(CamoError::Shape(format!("initial distribution has {} entries, expected {size}", init.len())));
    }
    let tree = Tree { mdp, policy, scheme, mode, n };
    let choices = match mode {
        OracleMode::Camouflage => scheme.num_appearances() as f64,
        OracleMode::StatePerception { domain } => (tree.options(domain, 0).len() as f64).powi(n as i32),
    };
    let per_level = choices * size as f64;
    let estimate: f64 = (1..=mdp.horizon()).map(|t| per_level.powi(t as i32)).sum::<f64>() * size as f64;
    if estimate > budget.max_nodes {
        return Err(CamoError::OracleBudget { estimate, limit: budget.max_nodes });
    }
    let mut total = 0.0;
    for (joint, &w) in init.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut states = vec![0; n];
        let mut k = joint;
        for i in (0..n).rev() {
            states[i] = k % ns;
            k /= ns;
        }
        total += w * tree.value(0, &states);
    }
    Ok(total)
}

/// Grid evaluation of one within-step budget problem: every target
/// assignment, every spend vector on the lattice `B / resolution` with total
/// at most `B`, every success pattern. `layer` is laid out as
/// `joint * num_appearances + y`.
pub fn brute_force_budget_value(
    layer: &[f64],
    joint: usize,
    scheme: &CamouflageScheme,
    model: &BudgetModel,
    resolution: usize,
    budget: &OracleBudget,
) -> Result<f64> {
    let m = scheme.objects.len();
    if m > 3 {
        return Err(CamoError::TooManyAttackers { active: m, limit: 3 });
    }
    if resolution < 10 {
        return Err(CamoError::config("resolution", "at least 10 points per axis"));
    }
    budget.check("resolution", resolution, budget.max_resolution)?;
    let ny = scheme.num_appearances();
    let row = layer
        .get(joint * ny..(joint + 1) * ny)
        .ok_or_else(|| CamoError::Shape(format!("no row for joint state {joint}")))?;
    let lattice = (resolution + 1).pow(m as u32) as f64;
    let estimate = ny as f64 * lattice * (1u64 << m) as f64;
    if estimate > budget.max_nodes {
        return Err(CamoError::OracleBudget { estimate, limit: budget.max_nodes });
    }
    let truth: Vec<usize> = scheme.objects.iter().map(|o| o.truth).collect();
    let mut best = f64::INFINITY;
    for y in 0..ny {
        let target = scheme.appearance(y).0;
        let cost: Vec<f64> = (0..m).map(|j| model.metric.distance(truth[j], target[j]) + model.epsilon).collect();
        let mut units = vec![0usize; m];
        'lattice: loop {
            if units.iter().sum::<usize>() <= resolution {
                let p: Vec<f64> = (0..m)
                    .map(|j| {
                        if target[j] == truth[j] {
                            0.0
                        } else {
                            (model.budget * units[j] as f64 / resolution as f64 / cost[j]).min(1.0)
                        }
                    })
                    .collect();
                let mut v = 0.0;
                for pattern in 0..1usize << m {
                    let mut prob = 1.0;
                    let mut shown = truth.clone();
                    for j in 0..m {
                        if pattern >> j & 1 == 1 {
                            prob *= p[j];
                            shown[j] = target[j];
                        } else {
                            prob *= 1.0 - p[j];
                        }
                    }
                    if prob != 0.0 {
                        let idx = scheme
                            .index_of(&Appearance(shown))
                            .ok_or_else(|| CamoError::OutOfDomain("outcome appearance".into()))?;
                        v += prob * row[idx];
                    }
                }
                best = best.min(v);
            }
            for u in units.iter_mut() {
                *u += 1;
                if *u <= resolution {
                    continue 'lattice;
                }
                *u = 0;
            }
            break;
        }
    }
    Ok(best)
}
