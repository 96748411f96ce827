//! Camouflageable objects and the perception map shared by all recipients.

use serde::{Deserialize, Serialize};

use crate::error::{CamoError, Result};
use crate::mdp::StageMdp;

/// What a recipient believes after the attack phase of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Perception {
    pub own_state: usize,
    pub env_config: usize,
}

/// One controllable object: its true status and the appearances it can take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CamoObject {
    pub name: String,
    pub truth: usize,
    pub domain: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSign {
    /// A `k`-step rotation makes state `s` look like `(s + k) mod P`.
    #[default]
    Plus,
    /// A `k`-step rotation makes state `s` look like `(s - k) mod P`.
    Minus,
}

/// How appearances turn into perceptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerceptionKind {
    /// One object (the ring orientation) whose value `k` is a rotation; own
    /// positions are perceived rotated, the configuration is untouched.
    RingRotation { positions: usize, sign: RotationSign },
    /// Each object is an attacker whose appearance is a cell; the perceived
    /// configuration is the mixed-radix index of the appearance tuple over
    /// `cells` (matching the MDP's placement ordering). Own states are seen
    /// truthfully.
    AttackerPosition { cells: usize },
    /// Explicit tables indexed by appearance configuration index:
    /// `own[y][s]` and `config[y]`. Shared by all agents.
    Tabulated { own: Vec<Vec<usize>>, config: Vec<usize> },
    /// Like `Tabulated` but with one table per agent (`own[i][y][s]`,
    /// `config[i][y]`); violates the shared-observation hypothesis.
    PerAgentTabulated { own: Vec<Vec<Vec<usize>>>, config: Vec<Vec<usize>> },
}

/// Appearance configuration: one appearance value per object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Appearance(pub Vec<usize>);

/// The attackers' controllable objects plus the perception map `h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CamouflageScheme {
    pub objects: Vec<CamoObject>,
    pub kind: PerceptionKind,
    pub num_states: usize,
    pub num_configs: usize,
    /// Index of the truthful configuration in the perceived config space.
    pub true_config: usize,
}

impl CamouflageScheme {
    pub fn new(
        objects: Vec<CamoObject>,
        kind: PerceptionKind,
        num_states: usize,
        num_configs: usize,
        true_config: usize,
    ) -> Result<Self> {
        let scheme = Self { objects, kind, num_states, num_configs, true_config };
        scheme.check()?;
        Ok(scheme)
    }

    /// Scheme with no objects: only the (empty) truthful appearance exists.
    pub fn identity_only(num_states: usize, num_configs: usize, true_config: usize) -> Self {
        Self {
            objects: Vec::new(),
            kind: PerceptionKind::Tabulated { own: vec![(0..num_states).collect()], config: vec![true_config] },
            num_states,
            num_configs,
            true_config,
        }
    }

    fn check(&self) -> Result<()> {
        for obj in &self.objects {
            if !obj.domain.contains(&obj.truth) {
                return Err(CamoError::InvalidScheme(format!(
                    "object `{}`: true status {} missing from its appearance domain",
                    obj.name, obj.truth
                )));
            }
            let mut sorted = obj.domain.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != obj.domain.len() {
                return Err(CamoError::InvalidScheme(format!("object `{}` has duplicate appearances", obj.name)));
            }
        }
        let ny = self.num_appearances();
        match &self.kind {
            PerceptionKind::RingRotation { positions, .. } => {
                if *positions != self.num_states || self.objects.len() != 1 {
                    return Err(CamoError::InvalidScheme(
                        "ring rotation needs one object and positions == num_states".into(),
                    ));
                }
            }
            PerceptionKind::AttackerPosition { cells } => {
                if *cells != self.num_states {
                    return Err(CamoError::InvalidScheme("attacker cells must equal num_states".into()));
                }
                let expect = cells.checked_pow(self.objects.len() as u32);
                if expect != Some(self.num_configs) {
                    return Err(CamoError::InvalidScheme(format!(
                        "{} attackers over {cells} cells need {} configs, have {}",
                        self.objects.len(),
                        expect.map_or("overflow".to_string(), |e| e.to_string()),
                        self.num_configs
                    )));
                }
                if self.objects.iter().any(|o| o.domain.iter().any(|&c| c >= *cells)) {
                    return Err(CamoError::InvalidScheme("attacker appearance outside the board".into()));
                }
            }
            PerceptionKind::Tabulated { own, config } => {
                check_table(own, config, ny, self.num_states, self.num_configs)?;
            }
            PerceptionKind::PerAgentTabulated { own, config } => {
                if own.len() != config.len() || own.is_empty() {
                    return Err(CamoError::InvalidScheme("per-agent tables disagree in length".into()));
                }
                for (o, c) in own.iter().zip(config) {
                    check_table(o, c, ny, self.num_states, self.num_configs)?;
                }
            }
        }
        let id = self.identity_index();
        for s in 0..self.num_states {
            for agent in 0..self.table_agents().max(1) {
                let p = self.perception_of(id, agent, s);
                if p.own_state != s || p.env_config != self.true_config {
                    return Err(CamoError::InvalidScheme(format!(
                        "truthful appearance does not yield the truth for agent {agent}, state {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn table_agents(&self) -> usize {
        match &self.kind {
            PerceptionKind::PerAgentTabulated { own, .. } => own.len(),
            _ => 0,
        }
    }

    /// True when `h` is identical across agents.
    pub fn shared_observation(&self) -> bool {
        !matches!(self.kind, PerceptionKind::PerAgentTabulated { .. })
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_appearances(&self) -> usize {
        self.objects.iter().map(|o| o.domain.len()).product()
    }

    /// Appearance configuration at `index` (Cartesian product, first object
    /// most significant, each domain in its declared order).
    pub fn appearance(&self, mut index: usize) -> Appearance {
        let mut values = vec![0; self.objects.len()];
        for (slot, obj) in values.iter_mut().zip(&self.objects).rev() {
            *slot = obj.domain[index % obj.domain.len()];
            index /= obj.domain.len();
        }
        Appearance(values)
    }

    pub fn index_of(&self, appearance: &Appearance) -> Option<usize> {
        if appearance.0.len() != self.objects.len() {
            return None;
        }
        let mut index = 0;
        for (value, obj) in appearance.0.iter().zip(&self.objects) {
            let pos = obj.domain.iter().position(|v| v == value)?;
            index = index * obj.domain.len() + pos;
        }
        Some(index)
    }

    pub fn identity_index(&self) -> usize {
        self.index_of(&self.identity_appearance()).expect("truth is always inside each appearance domain")
    }

    /// The truthful configuration `Y = X`.
    pub fn identity_appearance(&self) -> Appearance {
        Appearance(self.objects.iter().map(|o| o.truth).collect())
    }

    /// Every appearance configuration in index order.
    pub fn enumerate_appearances(&self) -> Vec<Appearance> {
        (0..self.num_appearances()).map(|i| self.appearance(i)).collect()
    }

    /// Fast path of [`perceive`]: the perception of `agent` whose actual own
    /// state is `own` under appearance index `y`.
    pub fn perception_of(&self, y: usize, agent: usize, own: usize) -> Perception {
        match &self.kind {
            PerceptionKind::RingRotation { positions, sign } => {
                let k = self.appearance(y).0[0] % positions;
                let seen = match sign {
                    RotationSign::Plus => (own + k) % positions,
                    RotationSign::Minus => (own + positions - k) % positions,
                };
                Perception { own_state: seen, env_config: self.true_config }
            }
            PerceptionKind::AttackerPosition { cells } => {
                let config = self.appearance(y).0.iter().fold(0, |acc, &c| acc * cells + c);
                Perception { own_state: own, env_config: config }
            }
            PerceptionKind::Tabulated { own: table, config } => {
                Perception { own_state: table[y][own], env_config: config[y] }
            }
            PerceptionKind::PerAgentTabulated { own: table, config } => {
                let i = agent % table.len();
                Perception { own_state: table[i][y][own], env_config: config[i][y] }
            }
        }
    }

    /// Checks that the scheme describes perceptions inside `mdp`.
    pub fn check_against(&self, mdp: &StageMdp) -> Result<()> {
        if self.num_states != mdp.num_states() || self.num_configs != mdp.num_configs() {
            return Err(CamoError::InvalidScheme(format!(
                "scheme covers {} states / {} configs, MDP has {} / {}",
                self.num_states,
                self.num_configs,
                mdp.num_states(),
                mdp.num_configs()
            )));
        }
        if self.true_config != mdp.true_config() {
            return Err(CamoError::InvalidScheme(format!(
                "scheme truth maps to config {}, MDP truth is {}",
                self.true_config,
                mdp.true_config()
            )));
        }
        Ok(())
    }
}

fn check_table(own: &[Vec<usize>], config: &[usize], ny: usize, states: usize, configs: usize) -> Result<()> {
    if own.len() != ny || config.len() != ny {
        return Err(CamoError::InvalidScheme(format!("perception tables need {ny} rows (one per appearance)")));
    }
    for row in own {
        if row.len() != states || row.iter().any(|&s| s >= states) {
            return Err(CamoError::InvalidScheme("own-state table out of range".into()));
        }
    }
    if config.iter().any(|&c| c >= configs) {
        return Err(CamoError::InvalidScheme("config table out of range".into()));
    }
    Ok(())
}

/// Cartesian product of the appearance domains, truthful configuration
/// included.
pub fn enumerate_appearances(scheme: &CamouflageScheme) -> Vec<Appearance> {
    scheme.enumerate_appearances()
}

pub fn identity_appearance(scheme: &CamouflageScheme) -> Appearance {
    scheme.identity_appearance()
}

/// `h_i(Y)` for agent `agent` given the actual joint state.
pub fn perceive(
    scheme: &CamouflageScheme,
    appearance: &Appearance,
    actual: &[usize],
    agent: usize,
) -> Result<Perception> {
    let y = scheme.index_of(appearance).ok_or_else(|| CamoError::OutOfDomain(format!("{:?}", appearance.0)))?;
    let own = *actual.get(agent).ok_or_else(|| CamoError::OutOfDomain(format!("agent {agent} of {}", actual.len())))?;
    if own >= scheme.num_states {
        return Err(CamoError::OutOfDomain(format!("state {own}")));
    }
    Ok(scheme.perception_of(y, agent, own))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distortion {
    #[default]
    Truthful,
    Free,
}

/// Per-agent set of delusions a state-perception attacker may induce. The
/// own-state part is either the truth or any state; the configuration part
/// is either the true configuration or any configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerceptionDomain {
    pub own: Distortion,
    pub config: Distortion,
}

impl PerceptionDomain {
    pub fn truthful() -> Self {
        Self::default()
    }

    pub fn free() -> Self {
        Self { own: Distortion::Free, config: Distortion::Free }
    }

    /// Candidate perceptions for an agent actually in `own`, in a fixed order
    /// (configuration major, own state minor).
    pub fn candidates(&self, own: usize, num_states: usize, num_configs: usize, true_config: usize) -> Vec<Perception> {
        let owns: Vec<usize> = match self.own {
            Distortion::Truthful => vec![own],
            Distortion::Free => (0..num_states).collect(),
        };
        let configs: Vec<usize> = match self.config {
            Distortion::Truthful => vec![true_config],
            Distortion::Free => (0..num_configs).collect(),
        };
        configs.iter().flat_map(|&c| owns.iter().map(move |&s| Perception { own_state: s, env_config: c })).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(sign: RotationSign) -> CamouflageScheme {
        CamouflageScheme::new(
            vec![CamoObject { name: "ring".into(), truth: 0, domain: vec![0, 1, 2] }],
            PerceptionKind::RingRotation { positions: 3, sign },
            3,
            1,
            0,
        )
        .unwrap()
    }

    fn board(q: usize, truths: &[usize]) -> CamouflageScheme {
        let cells = q * q;
        let objects = truths
            .iter()
            .enumerate()
            .map(|(j, &t)| CamoObject { name: format!("a{j}"), truth: t, domain: (0..cells).collect() })
            .collect();
        let true_config = truths.iter().fold(0, |acc, &c| acc * cells + c);
        CamouflageScheme::new(
            objects,
            PerceptionKind::AttackerPosition { cells },
            cells,
            cells.pow(truths.len() as u32),
            true_config,
        )
        .unwrap()
    }

    #[test]
    fn ring_rotations() {
        let s = ring(RotationSign::Plus);
        let all = s.enumerate_appearances();
        assert_eq!(all, vec![Appearance(vec![0]), Appearance(vec![1]), Appearance(vec![2])]);
        assert_eq!(perceive(&s, &Appearance(vec![0]), &[2], 0).unwrap().own_state, 2);
        assert_eq!(perceive(&s, &Appearance(vec![1]), &[0], 0).unwrap().own_state, 1);
        let m = ring(RotationSign::Minus);
        assert_eq!(perceive(&m, &Appearance(vec![1]), &[0], 0).unwrap().own_state, 2);
    }

    #[test]
    fn board_counts() {
        assert_eq!(board(2, &[0]).num_appearances(), 4);
        assert_eq!(board(3, &[4, 7]).num_appearances(), 81);
    }

    #[test]
    fn attacker_camouflage_moves_config_only() {
        let s = board(3, &[4]);
        let fake = Appearance(vec![0]);
        let p = perceive(&s, &fake, &[5], 0).unwrap();
        assert_eq!(p, Perception { own_state: 5, env_config: 0 });
        let two = board(3, &[4, 7]);
        assert_eq!(two.identity_appearance(), Appearance(vec![4, 7]));
        let truth = perceive(&two, &two.identity_appearance(), &[3, 8], 1).unwrap();
        assert_eq!(truth, Perception { own_state: 8, env_config: 4 * 9 + 7 });
    }

    #[test]
    fn identity_is_truthful_for_all_agents() {
        let s = board(2, &[3]);
        let y = s.identity_appearance();
        for a in 0..4 {
            for b in 0..4 {
                for i in 0..2 {
                    let p = perceive(&s, &y, &[a, b], i).unwrap();
                    assert_eq!(p.own_state, [a, b][i]);
                    assert_eq!(p.env_config, 3);
                }
            }
        }
    }

    #[test]
    fn truth_outside_domain_rejected() {
        let err = CamouflageScheme::new(
            vec![CamoObject { name: "x".into(), truth: 5, domain: vec![0, 1] }],
            PerceptionKind::Tabulated { own: vec![vec![0], vec![0]], config: vec![0, 0] },
            1,
            1,
            0,
        );
        assert!(matches!(err, Err(CamoError::InvalidScheme(_))));
    }

    #[test]
    fn out_of_domain_appearance() {
        let s = ring(RotationSign::Plus);
        assert!(matches!(perceive(&s, &Appearance(vec![7]), &[0], 0), Err(CamoError::OutOfDomain(_))));
    }

    #[test]
    fn rotation_three_is_identity() {
        let s = ring(RotationSign::Plus);
        for own in 0..3 {
            let k3 = match &s.kind {
                PerceptionKind::RingRotation { positions, .. } => (own + 3) % positions,
                _ => unreachable!(),
            };
            assert_eq!(k3, s.perception_of(0, 0, own).own_state);
        }
    }

    #[test]
    fn domain_candidates() {
        let d = PerceptionDomain { own: Distortion::Truthful, config: Distortion::Free };
        let c = d.candidates(2, 3, 4, 1);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|p| p.own_state == 2));
        assert_eq!(
            PerceptionDomain::truthful().candidates(2, 3, 4, 1),
            vec![Perception { own_state: 2, env_config: 1 }]
        );
        assert_eq!(PerceptionDomain::free().candidates(0, 3, 4, 1).len(), 12);
    }
}
