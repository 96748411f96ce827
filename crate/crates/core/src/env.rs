//! Benchmark instances: the 3-position ring and the q x q chessboard.

use serde::{Deserialize, Serialize};

use crate::attack::{CamoObject, CamouflageScheme, Distortion, PerceptionDomain, PerceptionKind, RotationSign};
use crate::error::{CamoError, Result};
use crate::mdp::StageMdp;
use crate::planners::{AppearanceMetric, AttackMode, Instance};

/// Reward table of the ring benchmark, `table[row][col]`.
pub const RING_TABLE: [[f64; 3]; 3] = [[3.0, 10.6, 1.0], [10.0, 1.0, 0.0], [1.0, 0.0, 11.6]];

/// Which index of the ring table is the state being entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardRows {
    /// `R(prev, next) = table[next][prev]`.
    #[default]
    Destination,
    /// `R(prev, next) = table[prev][next]`.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub positions: usize,
    pub table: Vec<Vec<f64>>,
    pub reward_rows: RewardRows,
    pub sign: RotationSign,
    /// Probability of moving in the intended direction (the rest goes the
    /// other way).
    pub move_prob: f64,
    /// Probability that "stay" stays (the rest splits evenly left/right).
    pub stay_prob: f64,
    pub horizon: usize,
}

impl Default for RingSpec {
    fn default() -> Self {
        Self {
            positions: 3,
            table: RING_TABLE.iter().map(|r| r.to_vec()).collect(),
            reward_rows: RewardRows::Destination,
            sign: RotationSign::Plus,
            move_prob: 0.8,
            stay_prob: 0.8,
            horizon: 5,
        }
    }
}

pub const RING_LEFT: usize = 0;
pub const RING_RIGHT: usize = 1;
pub const RING_STAY: usize = 2;

/// Ring MDP (actions left, right, stay; "right" goes `s -> s + 1`) and the
/// orientation camouflage with rotations `0..positions`.
pub fn build_ring(spec: &RingSpec) -> Result<(StageMdp, CamouflageScheme)> {
    let p = spec.positions;
    if p < 2 {
        return Err(CamoError::config("positions", "ring needs at least 2 positions"));
    }
    if spec.table.len() != p || spec.table.iter().any(|r| r.len() != p) {
        return Err(CamoError::config("table", format!("reward table must be {p}x{p}")));
    }
    for (field, v) in [("move_prob", spec.move_prob), ("stay_prob", spec.stay_prob)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CamoError::config(field, "must lie in [0, 1]"));
        }
    }
    let mut trans = vec![vec![vec![0.0; p]; 3]; p];
    for (s, row) in trans.iter_mut().enumerate() {
        let (l, r) = ((s + p - 1) % p, (s + 1) % p);
        row[RING_LEFT][l] += spec.move_prob;
        row[RING_LEFT][r] += 1.0 - spec.move_prob;
        row[RING_RIGHT][r] += spec.move_prob;
        row[RING_RIGHT][l] += 1.0 - spec.move_prob;
        row[RING_STAY][s] += spec.stay_prob;
        row[RING_STAY][l] += (1.0 - spec.stay_prob) / 2.0;
        row[RING_STAY][r] += (1.0 - spec.stay_prob) / 2.0;
    }
    let reward: Vec<Vec<f64>> = (0..p)
        .map(|prev| {
            (0..p)
                .map(|next| match spec.reward_rows {
                    RewardRows::Destination => spec.table[next][prev],
                    RewardRows::Origin => spec.table[prev][next],
                })
                .collect()
        })
        .collect();
    let mdp = StageMdp::stationary(spec.horizon, trans, vec![reward], vec!["ring".into()], 0)?;
    let scheme = CamouflageScheme::new(
        vec![CamoObject { name: "orientation".into(), truth: 0, domain: (0..p).collect() }],
        PerceptionKind::RingRotation { positions: p, sign: spec.sign },
        p,
        1,
        0,
    )?;
    Ok((mdp, scheme))
}

/// Reward for a move that hits the board edge and leaves the recipient where
/// it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockedMove {
    /// No cell is entered, nothing is earned.
    #[default]
    Zero,
    /// The current cell counts as entered again.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChessboardSpec {
    pub q: usize,
    /// Attacker cells as (row, col).
    pub attackers: Vec<(usize, usize)>,
    pub base_reward: f64,
    pub bonus_cell: (usize, usize),
    pub bonus_reward: f64,
    pub attacker_reward: f64,
    pub blocked_move: BlockedMove,
    pub horizon: usize,
}

impl Default for ChessboardSpec {
    fn default() -> Self {
        Self {
            q: 3,
            attackers: vec![(1, 1), (2, 1)],
            base_reward: 5.0,
            bonus_cell: (0, 1),
            bonus_reward: 10.0,
            attacker_reward: 1.0,
            blocked_move: BlockedMove::Zero,
            horizon: 5,
        }
    }
}

pub const BOARD_UP: usize = 0;
pub const BOARD_DOWN: usize = 1;
pub const BOARD_LEFT: usize = 2;
pub const BOARD_RIGHT: usize = 3;

impl ChessboardSpec {
    pub fn cells(&self) -> usize {
        self.q * self.q
    }

    pub fn cell(&self, (r, c): (usize, usize)) -> usize {
        r * self.q + c
    }

    /// Deterministic successor; off-board moves stay put.
    pub fn step(&self, s: usize, action: usize) -> usize {
        let (r, c) = (s / self.q, s % self.q);
        let (nr, nc) = match action {
            BOARD_UP if r > 0 => (r - 1, c),
            BOARD_DOWN if r + 1 < self.q => (r + 1, c),
            BOARD_LEFT if c > 0 => (r, c - 1),
            BOARD_RIGHT if c + 1 < self.q => (r, c + 1),
            _ => (r, c),
        };
        nr * self.q + nc
    }

    /// Reward for entering each cell with attackers at `placement`.
    pub fn cell_rewards(&self, placement: &[usize]) -> Vec<f64> {
        let mut r = vec![self.base_reward; self.cells()];
        r[self.cell(self.bonus_cell)] = self.bonus_reward;
        for &a in placement {
            r[a] = self.attacker_reward;
        }
        r
    }

    fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(CamoError::config("q", "board side must be positive"));
        }
        let inside = |(r, c): (usize, usize)| r < self.q && c < self.q;
        if !inside(self.bonus_cell) {
            return Err(CamoError::config("bonus_cell", "outside the board"));
        }
        if let Some(p) = self.attackers.iter().find(|&&p| !inside(p)) {
            return Err(CamoError::config("attackers", format!("{p:?} outside the board")));
        }
        for (i, a) in self.attackers.iter().enumerate() {
            if self.attackers[..i].contains(a) {
                return Err(CamoError::config("attackers", format!("{a:?} listed twice")));
            }
        }
        Ok(())
    }
}

/// All placements of `m` attackers over `cells`, lexicographic, agent 0 most
/// significant; this is the configuration index order.
fn placements(cells: usize, m: usize) -> Vec<Vec<usize>> {
    let count = cells.pow(m as u32);
    (0..count)
        .map(|mut k| {
            let mut v = vec![0; m];
            for slot in v.iter_mut().rev() {
                *slot = k % cells;
                k /= cells;
            }
            v
        })
        .collect()
}

/// Chessboard MDP with one reward table per perceived attacker placement and
/// the attacker-position camouflage.
pub fn build_chessboard(spec: &ChessboardSpec) -> Result<(StageMdp, CamouflageScheme)> {
    spec.validate()?;
    let cells = spec.cells();
    let m = spec.attackers.len();
    let trans: Vec<Vec<Vec<f64>>> = (0..cells)
        .map(|s| {
            (0..4)
                .map(|a| {
                    let mut row = vec![0.0; cells];
                    row[spec.step(s, a)] = 1.0;
                    row
                })
                .collect()
        })
        .collect();
    let all = placements(cells, m);
    let mut labels = Vec::with_capacity(all.len());
    let mut rewards = Vec::with_capacity(all.len());
    for placement in &all {
        let enter = spec.cell_rewards(placement);
        let table: Vec<Vec<f64>> = (0..cells)
            .map(|prev| {
                (0..cells)
                    .map(|next| match (prev == next, spec.blocked_move) {
                        (true, BlockedMove::Zero) => 0.0,
                        _ => enter[next],
                    })
                    .collect()
            })
            .collect();
        rewards.push(table);
        labels
            .push(placement.iter().map(|&c| format!("({},{})", c / spec.q, c % spec.q)).collect::<Vec<_>>().join(";"));
    }
    let truth: Vec<usize> = spec.attackers.iter().map(|&p| spec.cell(p)).collect();
    let true_config = truth.iter().fold(0, |acc, &c| acc * cells + c);
    let mdp = StageMdp::stationary(spec.horizon, trans, rewards, labels, true_config)?;
    let objects = truth
        .iter()
        .enumerate()
        .map(|(j, &c)| CamoObject { name: format!("attacker{j}"), truth: c, domain: (0..cells).collect() })
        .collect();
    let scheme = CamouflageScheme::new(
        objects,
        PerceptionKind::AttackerPosition { cells },
        cells,
        mdp.num_configs(),
        true_config,
    )?;
    Ok((mdp, scheme))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Ring(RingSpec),
    Chessboard(ChessboardSpec),
}

impl EnvSpec {
    pub fn build(&self) -> Result<(StageMdp, CamouflageScheme)> {
        match self {
            EnvSpec::Ring(r) => build_ring(r),
            EnvSpec::Chessboard(c) => build_chessboard(c),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            EnvSpec::Ring(r) => r.horizon,
            EnvSpec::Chessboard(c) => c.horizon,
        }
    }

    pub fn set_horizon(&mut self, horizon: usize) {
        match self {
            EnvSpec::Ring(r) => r.horizon = horizon,
            EnvSpec::Chessboard(c) => c.horizon = horizon,
        }
    }

    /// State-perception domain matching what camouflage distorts here: own
    /// position on the ring, attacker placement on the board. `widen` frees
    /// both parts.
    pub fn spa_domain(&self, widen: bool) -> PerceptionDomain {
        if widen {
            return PerceptionDomain::free();
        }
        match self {
            EnvSpec::Ring(_) => PerceptionDomain { own: Distortion::Free, config: Distortion::Truthful },
            EnvSpec::Chessboard(_) => PerceptionDomain { own: Distortion::Truthful, config: Distortion::Free },
        }
    }

    /// Distance between appearance values, for budget costs.
    pub fn metric(&self) -> AppearanceMetric {
        match self {
            EnvSpec::Ring(r) => AppearanceMetric::Cyclic { size: r.positions },
            EnvSpec::Chessboard(c) => AppearanceMetric::Manhattan { cols: c.q },
        }
    }

    pub fn instance(&self, widen: bool) -> Result<Instance> {
        let (mdp, scheme) = self.build()?;
        Instance::new(mdp, scheme, self.spa_domain(widen))
    }
}

/// A named benchmark setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub env: EnvSpec,
    pub recipients: usize,
    /// Average over every attacker placement instead of the fixed one.
    pub sweep: bool,
}

pub const PRESETS: [&str; 3] = ["ring-v1", "chessboard-3x3-v1", "chessboard-2x2-v1"];

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "ring-v1" => {
            Ok(Preset { name: "ring-v1", env: EnvSpec::Ring(RingSpec::default()), recipients: 2, sweep: false })
        }
        "chessboard-3x3-v1" => Ok(Preset {
            name: "chessboard-3x3-v1",
            env: EnvSpec::Chessboard(ChessboardSpec::default()),
            recipients: 3,
            sweep: false,
        }),
        "chessboard-2x2-v1" => Ok(Preset {
            name: "chessboard-2x2-v1",
            env: EnvSpec::Chessboard(ChessboardSpec { q: 2, attackers: vec![(0, 0)], ..ChessboardSpec::default() }),
            recipients: 2,
            sweep: true,
        }),
        other => Err(CamoError::config("preset", format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")))),
    }
}

/// Averaged trajectories over attacker placements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub placements: Vec<Vec<(usize, usize)>>,
    /// `[mode][time index]`, uniform average over placements.
    pub mean: Vec<Vec<f64>>,
    /// `[placement][mode][time index]`.
    pub runs: Vec<Vec<Vec<f64>>>,
}

/// Every placement of `template.attackers.len()` distinct attackers, in
/// lexicographic cell order.
pub fn distinct_placements(template: &ChessboardSpec) -> Vec<Vec<(usize, usize)>> {
    let cells = template.cells();
    let m = template.attackers.len();
    placements(cells, m)
        .into_iter()
        .filter(|p| p.windows(2).all(|w| w[0] < w[1]))
        .map(|p| p.into_iter().map(|c| (c / template.q, c % template.q)).collect())
        .collect()
}

/// Runs every mode for every placement (all distinct placements when `set` is
/// `None`) and averages the trajectories uniformly. `init` defaults to uniform.
pub fn attacker_position_sweep(
    template: &ChessboardSpec,
    n: usize,
    modes: &[AttackMode],
    set: Option<Vec<Vec<(usize, usize)>>>,
    init: Option<&[f64]>,
    widen: bool,
) -> Result<SweepResult> {
    use rayon::prelude::*;

    let set = set.unwrap_or_else(|| distinct_placements(template));
    if set.is_empty() {
        return Err(CamoError::config("sweep", "no placements"));
    }
    let runs = set
        .par_iter()
        .map(|placement| {
            let env = EnvSpec::Chessboard(ChessboardSpec { attackers: placement.clone(), ..template.clone() });
            let inst = env.instance(widen)?;
            let space = inst.space(n);
            let owned;
            let init = match init {
                Some(d) => d,
                None => {
                    owned = crate::mdp::uniform(&space);
                    &owned
                }
            };
            modes.iter().map(|m| Ok(inst.run(n, m, init)?.trajectory)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let len = template.horizon + 1;
    let mut mean = vec![vec![0.0; len]; modes.len()];
    for run in &runs {
        for (acc, traj) in mean.iter_mut().zip(run) {
            for (a, v) in acc.iter_mut().zip(traj) {
                *a += v / runs.len() as f64;
            }
        }
    }
    Ok(SweepResult { placements: set, mean, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::enumerate_appearances;
    use crate::mdp::validate_mdp;

    #[test]
    fn ring_loads_table() {
        let (mdp, scheme) = build_ring(&RingSpec::default()).unwrap();
        assert!(validate_mdp(&mdp).is_pass());
        // rows are destinations
        assert_eq!(mdp.reward(0, 1, 1, 0), 10.6);
        assert_eq!(mdp.reward(0, 1, 0, 1), 10.0);
        assert_eq!(mdp.reward(0, 1, 2, 2), 11.6);
        for (got, want) in mdp.row(1, 1, RING_STAY).iter().zip([0.1, 0.8, 0.1]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in mdp.row(1, 0, RING_RIGHT).iter().zip([0.0, 0.8, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(enumerate_appearances(&scheme).contains(&scheme.identity_appearance()));
        let (origin, _) = build_ring(&RingSpec { reward_rows: RewardRows::Origin, ..RingSpec::default() }).unwrap();
        assert_eq!(origin.reward(0, 1, 1, 0), 10.0);
    }

    #[test]
    fn chessboard_rewards() {
        let spec = ChessboardSpec::default();
        let (mdp, scheme) = build_chessboard(&spec).unwrap();
        assert!(validate_mdp(&mdp).is_pass());
        let c = mdp.true_config();
        assert_eq!(mdp.env_configs()[c], "(1,1);(2,1)");
        assert_eq!(mdp.reward(c, 1, 0, 1), 10.0);
        assert_eq!(mdp.reward(c, 1, 1, 4), 1.0);
        assert_eq!(mdp.reward(c, 1, 4, 7), 1.0);
        assert_eq!(mdp.reward(c, 1, 0, 3), 5.0);
        assert_eq!(scheme.num_appearances(), 81);
    }

    #[test]
    fn boundary_moves_stay() {
        let spec = ChessboardSpec::default();
        assert_eq!(spec.step(0, BOARD_UP), 0);
        assert_eq!(spec.step(0, BOARD_LEFT), 0);
        assert_eq!(spec.step(8, BOARD_RIGHT), 8);
        assert_eq!(spec.step(4, BOARD_UP), 1);
        let (mdp, _) = build_chessboard(&spec).unwrap();
        assert_eq!(mdp.reward(mdp.true_config(), 1, 0, 0), 0.0);
        let cell = ChessboardSpec { blocked_move: BlockedMove::Cell, ..spec };
        let (mdp, _) = build_chessboard(&cell).unwrap();
        assert_eq!(mdp.reward(mdp.true_config(), 1, 0, 0), 5.0);
    }

    #[test]
    fn attacker_on_bonus_cell_overrides() {
        let spec = ChessboardSpec { attackers: vec![(0, 1)], ..ChessboardSpec::default() };
        assert_eq!(spec.cell_rewards(&[1])[1], 1.0);
    }

    #[test]
    fn small_board_counts() {
        let spec = ChessboardSpec { q: 2, attackers: vec![(1, 0)], ..ChessboardSpec::default() };
        let (mdp, scheme) = build_chessboard(&spec).unwrap();
        assert_eq!(mdp.num_configs(), 4);
        assert_eq!(scheme.num_appearances(), 4);
        assert_eq!(distinct_placements(&spec).len(), 4);
    }

    #[test]
    fn rejects_bad_specs() {
        let dup = ChessboardSpec { attackers: vec![(1, 1), (1, 1)], ..ChessboardSpec::default() };
        assert!(build_chessboard(&dup).is_err());
        let off = ChessboardSpec { attackers: vec![(3, 0)], ..ChessboardSpec::default() };
        assert!(build_chessboard(&off).is_err());
        assert!(preset("nope").is_err());
    }
}
