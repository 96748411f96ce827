//! Tabular finite-horizon MDPs shared by all recipients.
//!
//! Time indices run `0..=T`. Step `t` (for `t` in `1..=T`) moves the
//! recipients from index `t - 1` to index `t` using `P_t` and pays `R_t`.
//! Policies are indexed by the time index the move starts from, so the
//! action taken during step `t` is `pi_{t-1}(s)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CamoError, Result};

/// Row sums must match 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Relative slack used when comparing action values; the lowest action index
/// within the slack of the maximum wins.
pub const TIE_TOL: f64 = 1e-9;

/// Stage-indexed tabular MDP of one recipient.
///
/// Rewards depend on `(s_prev, s_next)` only and may differ per environment
/// configuration (e.g. per attacker placement). Transitions are shared by all
/// configurations. `true_config` is the configuration the recipients actually
/// play in.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    // [step-1][s][a][s']
    transitions: Vec<f64>,
    // [config][step-1][s][s']
    rewards: Vec<f64>,
    env_configs: Vec<String>,
    true_config: usize,
}

impl StageMdp {
    /// Builds an MDP from nested tables. Only shapes are checked here; use
    /// [`validate_mdp`] for probability checks.
    ///
    /// `transitions[t][s][a][s']` for steps `1..=T` (outer index `t - 1`),
    /// `rewards[c][t][s][s']` per configuration and step.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<Vec<Vec<Vec<f64>>>>,
        rewards: Vec<Vec<Vec<Vec<f64>>>>,
        env_configs: Vec<String>,
        true_config: usize,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(CamoError::Shape("need at least one state and one action".into()));
        }
        let horizon = transitions.len();
        let mut flat_p = Vec::with_capacity(horizon * num_states * num_actions * num_states);
        for (t, stage) in transitions.iter().enumerate() {
            check_len(stage.len(), num_states, || format!("transitions[{t}]"))?;
            for (s, row) in stage.iter().enumerate() {
                check_len(row.len(), num_actions, || format!("transitions[{t}][{s}]"))?;
                for (a, dist) in row.iter().enumerate() {
                    check_len(dist.len(), num_states, || format!("transitions[{t}][{s}][{a}]"))?;
                    flat_p.extend_from_slice(dist);
                }
            }
        }
        if env_configs.is_empty() || rewards.len() != env_configs.len() {
            return Err(CamoError::Shape(format!(
                "{} reward tables for {} env configs",
                rewards.len(),
                env_configs.len()
            )));
        }
        if true_config >= env_configs.len() {
            return Err(CamoError::Shape(format!("true_config {true_config} out of range")));
        }
        let mut flat_r = Vec::with_capacity(env_configs.len() * horizon * num_states * num_states);
        for (c, per_stage) in rewards.iter().enumerate() {
            check_len(per_stage.len(), horizon, || format!("rewards[{c}]"))?;
            for (t, table) in per_stage.iter().enumerate() {
                check_len(table.len(), num_states, || format!("rewards[{c}][{t}]"))?;
                for (s, row) in table.iter().enumerate() {
                    check_len(row.len(), num_states, || format!("rewards[{c}][{t}][{s}]"))?;
                    flat_r.extend_from_slice(row);
                }
            }
        }
        Ok(Self { num_states, num_actions, horizon, transitions: flat_p, rewards: flat_r, env_configs, true_config })
    }

    /// Stage-invariant convenience constructor: one transition table and one
    /// reward table per configuration, repeated for every step.
    pub fn stationary(
        horizon: usize,
        transition: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<Vec<f64>>>,
        env_configs: Vec<String>,
        true_config: usize,
    ) -> Result<Self> {
        let num_states = transition.len();
        let num_actions = transition.first().map_or(0, Vec::len);
        let transitions = vec![transition; horizon];
        let rewards = rewards.into_iter().map(|r| vec![r; horizon]).collect();
        Self::new(num_states, num_actions, transitions, rewards, env_configs, true_config)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_configs(&self) -> usize {
        self.env_configs.len()
    }

    pub fn env_configs(&self) -> &[String] {
        &self.env_configs
    }

    pub fn true_config(&self) -> usize {
        self.true_config
    }

    /// Transition row `P_step(s, a, .)`; `step` in `1..=T`.
    pub fn row(&self, step: usize, s: usize, a: usize) -> &[f64] {
        debug_assert!(step >= 1 && step <= self.horizon);
        let n = self.num_states;
        let base = (((step - 1) * n + s) * self.num_actions + a) * n;
        &self.transitions[base..base + n]
    }

    /// Reward row `R_step(s, .)` under `config`; `step` in `1..=T`.
    pub fn reward_row(&self, config: usize, step: usize, s: usize) -> &[f64] {
        debug_assert!(step >= 1 && step <= self.horizon);
        let n = self.num_states;
        let base = ((config * self.horizon + (step - 1)) * n + s) * n;
        &self.rewards[base..base + n]
    }

    pub fn reward(&self, config: usize, step: usize, s: usize, next: usize) -> f64 {
        self.reward_row(config, step, s)[next]
    }

    /// Nonzero successors of `(s, a)` at `step`.
    pub fn successors(&self, step: usize, s: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(step, s, a).iter().copied().enumerate().filter(|&(_, p)| p > 0.0)
    }

    /// One-step expected reward of `(s, a)` at `step` under `config`.
    pub fn expected_reward(&self, config: usize, step: usize, s: usize, a: usize) -> f64 {
        self.row(step, s, a).iter().zip(self.reward_row(config, step, s)).map(|(p, r)| p * r).sum()
    }

    /// Same MDP with another configuration marked as the true one.
    pub fn with_true_config(mut self, config: usize) -> Result<Self> {
        if config >= self.num_configs() {
            return Err(CamoError::Shape(format!("true_config {config} out of range")));
        }
        self.true_config = config;
        Ok(self)
    }

    /// Truncated copy covering steps `1..=horizon`.
    pub fn truncated(&self, horizon: usize) -> Self {
        let horizon = horizon.min(self.horizon);
        let n = self.num_states;
        let stage_p = n * self.num_actions * n;
        let stage_r = n * n;
        let mut rewards = Vec::with_capacity(self.num_configs() * horizon * stage_r);
        for c in 0..self.num_configs() {
            let base = c * self.horizon * stage_r;
            rewards.extend_from_slice(&self.rewards[base..base + horizon * stage_r]);
        }
        Self {
            num_states: n,
            num_actions: self.num_actions,
            horizon,
            transitions: self.transitions[..horizon * stage_p].to_vec(),
            rewards,
            env_configs: self.env_configs.clone(),
            true_config: self.true_config,
        }
    }

    pub fn to_document(&self) -> MdpDocument {
        let n = self.num_states;
        let transitions = (1..=self.horizon)
            .map(|t| (0..n).map(|s| (0..self.num_actions).map(|a| self.row(t, s, a).to_vec()).collect()).collect())
            .collect();
        let rewards = (0..self.num_configs())
            .map(|c| (1..=self.horizon).map(|t| (0..n).map(|s| self.reward_row(c, t, s).to_vec()).collect()).collect())
            .collect();
        MdpDocument {
            num_states: n,
            num_actions: self.num_actions,
            horizon: self.horizon,
            transitions,
            rewards: RewardsDoc::PerStage(rewards),
            env_configs: Some(self.env_configs.clone()),
            true_config: self.true_config,
        }
    }

    /// Parses the JSON document form and validates probabilities.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MdpDocument = serde_json::from_str(text)?;
        let mdp = doc.into_mdp()?;
        let report = validate_mdp(&mdp);
        if !report.is_pass() {
            return Err(CamoError::InvalidMdp(report));
        }
        Ok(mdp)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }
}

fn check_len(got: usize, want: usize, what: impl FnOnce() -> String) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(CamoError::Shape(format!("{} has length {got}, expected {want}", what())))
    }
}

/// Serialized MDP.
///
/// ```json
/// {
///   "num_states": 2, "num_actions": 1, "horizon": 1,
///   "transitions": [[[[0.0, 1.0]], [[0.0, 1.0]]]],
///   "rewards": [[[0.0, 5.0], [0.0, 5.0]]],
///   "env_configs": ["default"],
///   "true_config": 0
/// }
/// ```
///
/// `transitions` is `[t][s][a][s']`. `rewards` is keyed by configuration and
/// then either `[s_prev][s_next]` (same table every step) or
/// `[t][s_prev][s_next]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub rewards: RewardsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_configs: Option<Vec<String>>,
    #[serde(default)]
    pub true_config: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardsDoc {
    PerStage(Vec<Vec<Vec<Vec<f64>>>>),
    Stationary(Vec<Vec<Vec<f64>>>),
}

impl MdpDocument {
    pub fn into_mdp(self) -> Result<StageMdp> {
        if self.transitions.len() != self.horizon {
            return Err(CamoError::Shape(format!(
                "horizon {} but {} transition stages",
                self.horizon,
                self.transitions.len()
            )));
        }
        let rewards = match self.rewards {
            RewardsDoc::PerStage(r) => r,
            RewardsDoc::Stationary(r) => r.into_iter().map(|t| vec![t; self.horizon]).collect(),
        };
        let env_configs =
            self.env_configs.unwrap_or_else(|| (0..rewards.len()).map(|c| format!("config{c}")).collect());
        StageMdp::new(self.num_states, self.num_actions, self.transitions, rewards, env_configs, self.true_config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    RowSum { step: usize, state: usize, action: usize, sum: f64 },
    ProbabilityOutOfRange { step: usize, state: usize, action: usize, next: usize, value: f64 },
    NonFiniteReward { config: usize, step: usize, prev: usize, next: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::RowSum { step, state, action, sum } => {
                write!(f, "row (t={step}, s={state}, a={action}) sums to {sum}")
            }
            ValidationIssue::ProbabilityOutOfRange { step, state, action, next, value } => {
                write!(f, "P(t={step}, s={state}, a={action}, s'={next}) = {value} outside [0, 1]")
            }
            ValidationIssue::NonFiniteReward { config, step, prev, next } => {
                write!(f, "reward (c={config}, t={step}, {prev}->{next}) is not finite")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "pass");
        }
        let parts: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks row sums, probability ranges and reward finiteness.
pub fn validate_mdp(mdp: &StageMdp) -> ValidationReport {
    let mut issues = Vec::new();
    for step in 1..=mdp.horizon {
        for s in 0..mdp.num_states {
            for a in 0..mdp.num_actions {
                let row = mdp.row(step, s, a);
                for (next, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        issues.push(ValidationIssue::ProbabilityOutOfRange {
                            step,
                            state: s,
                            action: a,
                            next,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if sum.is_nan() || (sum - 1.0).abs() > ROW_SUM_TOL {
                    issues.push(ValidationIssue::RowSum { step, state: s, action: a, sum });
                }
            }
        }
        for c in 0..mdp.num_configs() {
            for s in 0..mdp.num_states {
                for (next, r) in mdp.reward_row(c, step, s).iter().enumerate() {
                    if !r.is_finite() {
                        issues.push(ValidationIssue::NonFiniteReward { config: c, step, prev: s, next });
                    }
                }
            }
        }
    }
    ValidationReport { issues }
}

/// Recipients' optimal policies, one table per environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyFamily {
    horizon: usize,
    num_states: usize,
    num_configs: usize,
    // [c][t][s], t in 0..T
    actions: Vec<usize>,
    // [c][t][s], t in 0..=T
    values: Vec<f64>,
}

impl PolicyFamily {
    /// Action taken at time index `t` (during step `t + 1`) by a recipient
    /// that believes it is in `state` under configuration `config`.
    pub fn action(&self, config: usize, t: usize, state: usize) -> usize {
        self.actions[(config * self.horizon + t) * self.num_states + state]
    }

    /// Optimal expected reward-to-go from time index `t`.
    pub fn value(&self, config: usize, t: usize, state: usize) -> f64 {
        self.values[(config * (self.horizon + 1) + t) * self.num_states + state]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_configs(&self) -> usize {
        self.num_configs
    }
}

/// Index of the first maximal entry, allowing `TIE_TOL` relative slack.
pub(crate) fn argmax_lowest(values: &[f64]) -> (usize, f64) {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * best.abs().max(1.0);
    let idx = values.iter().position(|&v| v >= best - slack).unwrap_or(0);
    (idx, best)
}

/// Backward induction per environment configuration.
pub fn solve_policy_family(mdp: &StageMdp) -> Result<PolicyFamily> {
    let report = validate_mdp(mdp);
    if !report.is_pass() {
        return Err(CamoError::InvalidMdp(report));
    }
    let (n, horizon, na) = (mdp.num_states, mdp.horizon, mdp.num_actions);
    let configs = mdp.num_configs();
    let mut actions = vec![0usize; configs * horizon * n];
    let mut values = vec![0.0; configs * (horizon + 1) * n];
    let mut q = vec![0.0; na];
    for c in 0..configs {
        let vbase = |t: usize| (c * (horizon + 1) + t) * n;
        for t in (0..horizon).rev() {
            let step = t + 1;
            for s in 0..n {
                let rewards = mdp.reward_row(c, step, s);
                for (a, qa) in q.iter_mut().enumerate() {
                    *qa = mdp
                        .row(step, s, a)
                        .iter()
                        .enumerate()
                        .map(|(next, p)| p * (rewards[next] + values[vbase(step) + next]))
                        .sum();
                }
                let (best_a, best) = argmax_lowest(&q);
                actions[(c * horizon + t) * n + s] = best_a;
                values[vbase(t) + s] = best;
            }
        }
    }
    Ok(PolicyFamily { horizon, num_states: n, num_configs: configs, actions, values })
}

/// Mixed-radix indexing of joint recipient states (agent 0 most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointSpace {
    agents: usize,
    states: usize,
}

impl JointSpace {
    pub fn new(agents: usize, states: usize) -> Self {
        Self { agents, states }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn states_per_agent(&self) -> usize {
        self.states
    }

    pub fn size(&self) -> usize {
        self.states.pow(self.agents as u32)
    }

    pub fn encode(&self, joint: &[usize]) -> usize {
        joint.iter().fold(0, |acc, &s| acc * self.states + s)
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.states;
            index /= self.states;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.agents];
        self.decode_into(index, &mut out);
        out
    }

    /// Stride of agent `i` in the joint index.
    pub fn stride(&self, agent: usize) -> usize {
        self.states.pow((self.agents - 1 - agent) as u32)
    }
}

/// Calls `f(successor_index, probability)` for every joint successor of
/// `states` under per-agent `actions`, agents moving independently.
pub fn for_each_joint_successor(
    mdp: &StageMdp,
    space: &JointSpace,
    step: usize,
    states: &[usize],
    actions: &[usize],
    mut f: impl FnMut(usize, f64),
) {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        mdp: &StageMdp,
        space: &JointSpace,
        step: usize,
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
        for (next, p) in mdp.successors(step, states[agent], actions[agent]) {
            rec(mdp, space, step, states, actions, agent + 1, index + next * stride, prob * p, f);
        }
    }
    rec(mdp, space, step, states, actions, 0, 0, 1.0, &mut f);
}

pub(crate) fn check_normalized(dist: &[f64]) -> Result<()> {
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL || dist.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(CamoError::NotNormalized { sum });
    }
    Ok(())
}

/// Pushes a joint distribution through one step. `select(agent, own_state)`
/// returns the action of each agent.
pub fn push_forward(
    dist: &[f64],
    mut select: impl FnMut(usize, usize) -> usize,
    mdp: &StageMdp,
    space: &JointSpace,
    step: usize,
) -> Result<Vec<f64>> {
    if dist.len() != space.size() {
        return Err(CamoError::Shape(format!(
            "distribution has {} entries, joint space has {}",
            dist.len(),
            space.size()
        )));
    }
    check_normalized(dist)?;
    let mut out = vec![0.0; dist.len()];
    let mut states = vec![0; space.agents()];
    let mut actions = vec![0; space.agents()];
    for (idx, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        space.decode_into(idx, &mut states);
        for (i, a) in actions.iter_mut().enumerate() {
            *a = select(i, states[i]);
        }
        for_each_joint_successor(mdp, space, step, &states, &actions, |next, p| {
            out[next] += mass * p;
        });
    }
    Ok(out)
}

/// Cumulative expected total reward of `n` unattacked recipients, indices
/// `0..=T`, computed by exact distribution push-forward.
pub fn expected_reward_no_attack(mdp: &StageMdp, n: usize, init: &[f64]) -> Result<Vec<f64>> {
    let policy = solve_policy_family(mdp)?;
    expected_reward_with_policy(mdp, &policy, n, init)
}

pub(crate) fn expected_reward_with_policy(
    mdp: &StageMdp,
    policy: &PolicyFamily,
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
    let c = mdp.true_config();
    let mut traj = Vec::with_capacity(mdp.horizon() + 1);
    traj.push(0.0);
    let mut dist = init.to_vec();
    let mut states = vec![0; n];
    for t in 0..mdp.horizon() {
        let step = t + 1;
        let mut gained = 0.0;
        for (idx, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            space.decode_into(idx, &mut states);
            gained +=
                mass * states.iter().map(|&s| mdp.expected_reward(c, step, s, policy.action(c, t, s))).sum::<f64>();
        }
        dist = push_forward(&dist, |_, s| policy.action(c, t, s), mdp, &space, step)?;
        traj.push(traj[t] + gained);
    }
    Ok(traj)
}

/// Uniform distribution over the joint space.
pub fn uniform(space: &JointSpace) -> Vec<f64> {
    let size = space.size();
    vec![1.0 / size as f64; size]
}

/// Point mass on a joint state.
pub fn point_mass(space: &JointSpace, joint: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; space.size()];
    dist[space.encode(joint)] = 1.0;
    dist
}
