//! Attacker-side dynamic programming.
//!
//! Pre-attack dynamic-programming states are joint recipient states; the
//! post-attack states additionally carry the appearance configuration. Each
//! step alternates an attack phase (minimization over what the attackers
//! control) and a move phase (expectation over independent recipient moves,
//! rewards paid in the true environment).

mod budget;
mod camouflage;
mod evaluate;
mod perception;
mod rollout;

use serde::{Deserialize, Serialize};

pub use budget::{
    minimize_multilinear, optimize_row, plan_budgeted_camouflage, within_step_optimize, AppearanceMetric,
    BudgetDecision, BudgetModel, SolverMode, EXACT_LIMIT,
};
pub use camouflage::{plan_camouflage, plan_fixed_appearance, post_move_update};
pub use evaluate::evaluate_plan;
pub use perception::{plan_state_perception, plan_state_perception_joint};
pub use rollout::{simulate_rollouts, RolloutStats};

use crate::attack::{CamouflageScheme, Perception, PerceptionDomain};
use crate::error::{CamoError, Result};
use crate::mdp::{solve_policy_family, JointSpace, PolicyFamily, StageMdp};

/// Attacker value functions.
///
/// `pre[t]` holds `V*_t` over joint states for `t = 0..=T`; `post[t - 1]`
/// holds `V*_{t-0.5}` over `(joint state, appearance)` pairs, laid out as
/// `joint * num_appearances + y`. `post` is empty for planners that do not
/// materialize the post-attack layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    pub horizon: usize,
    pub num_joint: usize,
    pub num_appearances: usize,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn pre(&self, t: usize) -> &[f64] {
        &self.pre[t]
    }

    /// `V*_{t-0.5}` layer, `t` in `1..=T`.
    pub fn post(&self, t: usize) -> Option<&[f64]> {
        self.post.get(t.checked_sub(1)?).map(Vec::as_slice)
    }

    /// `sum_s init(s) V*_0(s)`.
    pub fn initial_value(&self, init: &[f64]) -> f64 {
        self.pre[0].iter().zip(init).map(|(v, p)| v * p).sum()
    }
}

/// Per-step attack prescription. Vectors are indexed by time index
/// `t = 0..T` (the attack preceding step `t + 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackPlan {
    /// Appearance index per `(t, joint state)`.
    Camouflage { choices: Vec<Vec<usize>> },
    /// Delusion per `(t, own state)`, applied to every agent independently.
    StatePerception { choices: Vec<Vec<Perception>> },
    /// Per-agent delusions per `(t, joint state)`.
    JointStatePerception { choices: Vec<Vec<Vec<Perception>>> },
    /// Targets and spend per `(t, joint state)`.
    Budgeted { choices: Vec<Vec<BudgetDecision>> },
}

impl AttackPlan {
    pub fn horizon(&self) -> usize {
        match self {
            AttackPlan::Camouflage { choices } => choices.len(),
            AttackPlan::StatePerception { choices } => choices.len(),
            AttackPlan::JointStatePerception { choices } => choices.len(),
            AttackPlan::Budgeted { choices } => choices.len(),
        }
    }

    /// Distribution over per-agent perceptions at `(t, joint)`.
    pub(crate) fn perceptions(
        &self,
        t: usize,
        joint: usize,
        states: &[usize],
        scheme: &CamouflageScheme,
        table: &PerceptionTable,
    ) -> Result<Vec<(f64, Vec<Perception>)>> {
        let missing = || CamoError::PlanMismatch { t, state: joint };
        let via =
            |y: usize| -> Vec<Perception> { states.iter().enumerate().map(|(i, &s)| table.get(y, i, s)).collect() };
        match self {
            AttackPlan::Camouflage { choices } => {
                let y = *choices.get(t).and_then(|c| c.get(joint)).ok_or_else(missing)?;
                if y >= table.num_appearances {
                    return Err(missing());
                }
                Ok(vec![(1.0, via(y))])
            }
            AttackPlan::StatePerception { choices } => {
                let row = choices.get(t).ok_or_else(missing)?;
                let percs =
                    states.iter().map(|&s| row.get(s).copied().ok_or_else(missing)).collect::<Result<Vec<_>>>()?;
                Ok(vec![(1.0, percs)])
            }
            AttackPlan::JointStatePerception { choices } => {
                let percs = choices.get(t).and_then(|c| c.get(joint)).ok_or_else(missing)?;
                if percs.len() != states.len() {
                    return Err(missing());
                }
                Ok(vec![(1.0, percs.clone())])
            }
            AttackPlan::Budgeted { choices } => {
                let decision = choices.get(t).and_then(|c| c.get(joint)).ok_or_else(missing)?;
                Ok(decision.outcomes(scheme).into_iter().map(|(p, y)| (p, via(y))).collect())
            }
        }
    }
}

/// Precomputed `h(y, agent, own state)`.
#[derive(Debug, Clone)]
pub(crate) struct PerceptionTable {
    num_appearances: usize,
    num_states: usize,
    tables: usize,
    data: Vec<Perception>,
}

impl PerceptionTable {
    pub(crate) fn new(scheme: &CamouflageScheme, agents: usize) -> Self {
        let ny = scheme.num_appearances();
        let ns = scheme.num_states;
        let tables = if scheme.shared_observation() { 1 } else { agents.max(1) };
        let mut data = Vec::with_capacity(tables * ny * ns);
        for agent in 0..tables {
            for y in 0..ny {
                for s in 0..ns {
                    data.push(scheme.perception_of(y, agent, s));
                }
            }
        }
        Self { num_appearances: ny, num_states: ns, tables, data }
    }

    #[inline]
    pub(crate) fn get(&self, y: usize, agent: usize, own: usize) -> Perception {
        let table = if self.tables == 1 { 0 } else { agent % self.tables };
        self.data[(table * self.num_appearances + y) * self.num_states + own]
    }
}

/// Successor lists and true-environment expected rewards for one step.
pub(crate) struct StepKernel {
    actions: usize,
    succ: Vec<Vec<(usize, f64)>>,
    reward: Vec<f64>,
}

impl StepKernel {
    pub(crate) fn new(mdp: &StageMdp, step: usize) -> Self {
        let (ns, na) = (mdp.num_states(), mdp.num_actions());
        let c = mdp.true_config();
        let mut succ = Vec::with_capacity(ns * na);
        let mut reward = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                succ.push(mdp.successors(step, s, a).collect());
                reward.push(mdp.expected_reward(c, step, s, a));
            }
        }
        Self { actions: na, succ, reward }
    }

    #[inline]
    pub(crate) fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.actions + a]
    }

    #[inline]
    pub(crate) fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.succ[s * self.actions + a]
    }

    /// `sum_i r(s_i, a_i) + E[v_next(s')]` for independent agents.
    pub(crate) fn joint_value(&self, space: &JointSpace, states: &[usize], actions: &[usize], v_next: &[f64]) -> f64 {
        let reward: f64 = states.iter().zip(actions).map(|(&s, &a)| self.reward(s, a)).sum();
        reward + self.expect(space, states, actions, v_next, 0, 0, 1.0)
    }

    /// Calls `f(successor index, probability)` over joint successors.
    pub(crate) fn for_each_successor(
        &self,
        space: &JointSpace,
        states: &[usize],
        actions: &[usize],
        f: &mut dyn FnMut(usize, f64),
    ) {
        self.walk(space, states, actions, 0, 0, 1.0, f);
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        space: &JointSpace,
        states: &[usize],
        actions: &[usize],
        agent: usize,
        index: usize,
        prob: f64,
        f: &mut dyn FnMut(usize, f64),
    ) {
        if agent == states.len() {
            f(index, prob);
            return;
        }
        let stride = space.stride(agent);
        for &(next, p) in self.successors(states[agent], actions[agent]) {
            self.walk(space, states, actions, agent + 1, index + next * stride, prob * p, f);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn expect(
        &self,
        space: &JointSpace,
        states: &[usize],
        actions: &[usize],
        v: &[f64],
        agent: usize,
        index: usize,
        prob: f64,
    ) -> f64 {
        if agent == states.len() {
            return prob * v[index];
        }
        let stride = space.stride(agent);
        self.successors(states[agent], actions[agent])
            .iter()
            .map(|&(next, p)| self.expect(space, states, actions, v, agent + 1, index + next * stride, prob * p))
            .sum()
    }
}

/// A solved benchmark: MDP, camouflage scheme, recipients' policies and the
/// state-perception domain used for comparisons.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: StageMdp,
    pub scheme: CamouflageScheme,
    pub policy: PolicyFamily,
    pub spa_domain: PerceptionDomain,
}

impl Instance {
    pub fn new(mdp: StageMdp, scheme: CamouflageScheme, spa_domain: PerceptionDomain) -> Result<Self> {
        scheme.check_against(&mdp)?;
        let policy = solve_policy_family(&mdp)?;
        Ok(Self { mdp, scheme, policy, spa_domain })
    }

    pub fn space(&self, n: usize) -> JointSpace {
        JointSpace::new(n, self.mdp.num_states())
    }

    pub fn solve(&self, n: usize, mode: &AttackMode) -> Result<(AttackPlan, ValueTable)> {
        match mode {
            AttackMode::NoAttack => {
                plan_fixed_appearance(&self.mdp, &self.policy, &self.scheme, n, self.scheme.identity_index())
            }
            AttackMode::Camouflage => plan_camouflage(&self.mdp, &self.policy, &self.scheme, n),
            AttackMode::StatePerception => plan_state_perception(&self.mdp, &self.policy, n, &self.spa_domain),
            AttackMode::Budgeted(model) => plan_budgeted_camouflage(&self.mdp, &self.policy, &self.scheme, model, n),
        }
    }

    /// Solves and evaluates one mode from `init`.
    pub fn run(&self, n: usize, mode: &AttackMode, init: &[f64]) -> Result<ModeRun> {
        let (plan, values) = self.solve(n, mode)?;
        let trajectory = evaluate_plan(&self.mdp, &self.policy, &self.scheme, &plan, n, init)?;
        Ok(ModeRun { plan, values, trajectory })
    }
}

#[derive(Debug, Clone)]
pub struct ModeRun {
    pub plan: AttackPlan,
    pub values: ValueTable,
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttackMode {
    NoAttack,
    Camouflage,
    StatePerception,
    Budgeted(BudgetModel),
}

impl AttackMode {
    pub fn label(&self) -> String {
        match self {
            AttackMode::NoAttack => "no_attack".into(),
            AttackMode::Camouflage => "camouflage".into(),
            AttackMode::StatePerception => "state_perception".into(),
            AttackMode::Budgeted(m) => format!("budget_{}", crate::harness::format_number(m.budget)),
        }
    }
}
