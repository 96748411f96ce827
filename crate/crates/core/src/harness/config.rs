use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{CamouflageScheme, PerceptionDomain, RotationSign};
use crate::env::{preset, BlockedMove, ChessboardSpec, EnvSpec, RewardRows};
use crate::error::{CamoError, Result};
use crate::mdp::{check_normalized, point_mass, uniform, JointSpace, MdpDocument};
use crate::planners::{AppearanceMetric, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[serde(alias = "no_attack")]
    None,
    Camouflage,
    #[serde(alias = "state_perception")]
    Spa,
    Budgeted,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Uniform,
    /// Point mass on the given per-agent states.
    Point { states: Vec<usize> },
    /// Full joint distribution, agent 0 most significant.
    Explicit { probs: Vec<f64> },
}

impl InitSpec {
    pub fn distribution(&self, space: &JointSpace) -> Result<Vec<f64>> {
        match self {
            InitSpec::Uniform => Ok(uniform(space)),
            InitSpec::Point { states } => {
                if states.len() != space.agents() || states.iter().any(|&s| s >= space.states_per_agent()) {
                    return Err(CamoError::config("init.states", "one in-range state per recipient required"));
                }
                Ok(point_mass(space, states))
            }
            InitSpec::Explicit { probs } => {
                if probs.len() != space.size() {
                    return Err(CamoError::config(
                        "init.probs",
                        format!("{} entries, joint space has {}", probs.len(), space.size()),
                    ));
                }
                check_normalized(probs).map_err(|e| CamoError::config("init.probs", e.to_string()))?;
                Ok(probs.clone())
            }
        }
    }
}

/// A fully specified instance given inline instead of a preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineInstance {
    pub mdp: MdpDocument,
    pub scheme: CamouflageScheme,
    #[serde(default = "PerceptionDomain::free")]
    pub spa_domain: PerceptionDomain,
    #[serde(default = "discrete")]
    pub metric: AppearanceMetric,
}

fn discrete() -> AppearanceMetric {
    AppearanceMetric::Discrete
}

fn default_modes() -> Vec<ModeName> {
    vec![ModeName::None, ModeName::Camouflage, ModeName::Spa]
}

fn default_epsilon() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

fn default_tolerance() -> f64 {
    0.03
}

/// Experiment description, read from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    /// One of the named presets; exclusive with `instance`.
    pub preset: Option<String>,
    pub instance: Option<InlineInstance>,
    pub recipients: Option<usize>,
    pub horizon: Option<usize>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeName>,
    /// Per-step budgets for the budgeted mode.
    #[serde(default)]
    pub budgets: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Extra epsilons for the budget sensitivity table.
    #[serde(default)]
    pub epsilon_sensitivity: Vec<f64>,
    /// Ring only.
    pub sign: Option<RotationSign>,
    /// Ring only.
    pub reward_rows: Option<RewardRows>,
    /// Ring only: also report ratios for every sign/row-orientation pair.
    #[serde(default = "yes")]
    pub orientation_report: bool,
    /// Reference (camouflage, state perception) ratios; the manifest records
    /// which orientation comes closest.
    pub target_ratios: Option<[f64; 2]>,
    #[serde(default = "default_tolerance")]
    pub target_tolerance: f64,
    /// Board only.
    pub board_size: Option<usize>,
    /// Board only, (row, col) per attacker.
    pub attackers: Option<Vec<(usize, usize)>>,
    /// Board only.
    pub blocked_move: Option<BlockedMove>,
    /// Board only: average over every distinct attacker placement.
    pub sweep: Option<bool>,
    /// Emit the one-step camouflage/perception gap table.
    #[serde(default)]
    pub bounds: bool,
    #[serde(default = "yes")]
    pub check_invariants: bool,
    #[serde(default)]
    pub rollout_episodes: u64,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Let state perception distort both own state and configuration.
    #[serde(default)]
    pub spa_widen: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CamoError::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_preset(name: &str) -> Self {
        Self {
            name: Some(name.to_string()),
            preset: Some(name.to_string()),
            instance: None,
            recipients: None,
            horizon: None,
            init: InitSpec::Uniform,
            modes: default_modes(),
            budgets: Vec::new(),
            epsilon: default_epsilon(),
            epsilon_sensitivity: Vec::new(),
            sign: None,
            reward_rows: None,
            orientation_report: true,
            target_ratios: None,
            target_tolerance: default_tolerance(),
            board_size: None,
            attackers: None,
            blocked_move: None,
            sweep: None,
            bounds: false,
            check_invariants: true,
            rollout_episodes: 0,
            seed: 0,
            out_dir: None,
            spa_widen: false,
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.recipients == Some(0) {
            return Err(CamoError::config("recipients", "must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CamoError::config("epsilon", "must be > 0"));
        }
        if let Some(e) = self.epsilon_sensitivity.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(CamoError::config("epsilon_sensitivity", format!("{e} is not > 0")));
        }
        if let Some(b) = self.budgets.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(CamoError::config("budgets", format!("{b} is not a finite nonnegative budget")));
        }
        if self.modes.contains(&ModeName::Budgeted) && self.budgets.is_empty() {
            return Err(CamoError::config("budgets", "budgeted mode needs at least one budget"));
        }
        let board_only = [
            ("board_size", self.board_size.is_some()),
            ("attackers", self.attackers.is_some()),
            ("blocked_move", self.blocked_move.is_some()),
            ("sweep", self.sweep.is_some()),
        ];
        let ring_only = [("sign", self.sign.is_some()), ("reward_rows", self.reward_rows.is_some())];
        let reject = |fields: &[(&str, bool)], kind: &str| -> Result<()> {
            match fields.iter().find(|f| f.1) {
                Some((f, _)) => Err(CamoError::config(*f, format!("not applicable to {kind}"))),
                None => Ok(()),
            }
        };

        let (source, recipients, sweep, label) = match (&self.preset, &self.instance) {
            (Some(_), Some(_)) => return Err(CamoError::config("preset", "give either `preset` or `instance`")),
            (None, None) => return Err(CamoError::config("preset", "missing `preset` or `instance`")),
            (Some(name), None) => {
                let p = preset(name)?;
                let mut env = p.env.clone();
                if let Some(t) = self.horizon {
                    env.set_horizon(t);
                }
                let mut sweep = None;
                match &mut env {
                    EnvSpec::Ring(r) => {
                        reject(&board_only, "the ring")?;
                        if let Some(s) = self.sign {
                            r.sign = s;
                        }
                        if let Some(rows) = self.reward_rows {
                            r.reward_rows = rows;
                        }
                    }
                    EnvSpec::Chessboard(c) => {
                        reject(&ring_only, "the chessboard")?;
                        if let Some(q) = self.board_size {
                            c.q = q;
                        }
                        if let Some(a) = &self.attackers {
                            c.attackers = a.clone();
                        }
                        if let Some(b) = self.blocked_move {
                            c.blocked_move = b;
                        }
                        if self.sweep.unwrap_or(p.sweep) {
                            sweep = Some(crate::env::distinct_placements(c));
                        }
                    }
                }
                (Source::Env(env), self.recipients.unwrap_or(p.recipients), sweep, p.name.to_string())
            }
            (None, Some(inline)) => {
                reject(&board_only, "inline instances")?;
                reject(&ring_only, "inline instances")?;
                let mut doc = inline.mdp.clone();
                if let Some(t) = self.horizon {
                    if t > doc.horizon {
                        return Err(CamoError::config("horizon", "cannot extend an inline MDP"));
                    }
                    doc.transitions.truncate(t);
                    if let crate::mdp::RewardsDoc::PerStage(r) = &mut doc.rewards {
                        r.iter_mut().for_each(|c| c.truncate(t));
                    }
                    doc.horizon = t;
                }
                let mdp = doc.into_mdp()?;
                let s = &inline.scheme;
                let scheme = CamouflageScheme::new(
                    s.objects.clone(),
                    s.kind.clone(),
                    s.num_states,
                    s.num_configs,
                    s.true_config,
                )?;
                let recipients = self.recipients.unwrap_or(1);
                (
                    Source::Inline { mdp, scheme, spa_domain: inline.spa_domain, metric: inline.metric },
                    recipients,
                    None,
                    "inline".to_string(),
                )
            }
        };
        Ok(Resolved { name: self.name.clone().unwrap_or(label), source, recipients, sweep })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Env(EnvSpec),
    Inline {
        #[serde(skip)]
        mdp: crate::mdp::StageMdp,
        scheme: CamouflageScheme,
        spa_domain: PerceptionDomain,
        metric: AppearanceMetric,
    },
}

/// Config after preset expansion and overrides.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub name: String,
    pub source: Source,
    pub recipients: usize,
    pub sweep: Option<Vec<Vec<(usize, usize)>>>,
}

impl Resolved {
    pub fn metric(&self) -> AppearanceMetric {
        match &self.source {
            Source::Env(env) => env.metric(),
            Source::Inline { metric, .. } => *metric,
        }
    }

    pub fn horizon(&self) -> usize {
        match &self.source {
            Source::Env(env) => env.horizon(),
            Source::Inline { mdp, .. } => mdp.horizon(),
        }
    }

    pub fn is_ring(&self) -> bool {
        matches!(self.source, Source::Env(EnvSpec::Ring(_)))
    }

    /// Instance for one attacker placement (or the configured one).
    pub fn instance(&self, placement: Option<&[(usize, usize)]>, widen: bool) -> Result<Instance> {
        match (&self.source, placement) {
            (Source::Env(EnvSpec::Chessboard(c)), Some(p)) => {
                EnvSpec::Chessboard(ChessboardSpec { attackers: p.to_vec(), ..c.clone() }).instance(widen)
            }
            (Source::Env(env), _) => env.instance(widen),
            (Source::Inline { mdp, scheme, spa_domain, .. }, _) => {
                let domain = if widen { PerceptionDomain::free() } else { *spa_domain };
                Instance::new(mdp.clone(), scheme.clone(), domain)
            }
        }
    }
}
