//! Per-step budget-constrained camouflage.
//!
//! Attacker `j` pays `b_j` toward its target and succeeds with probability
//! `min(b_j / C_j, 1)`, `C_j = d(truth_j, target_j) + epsilon`. Failures keep
//! the truthful appearance. For fixed targets the expected post-attack value
//! is multilinear in the success probabilities `p`, minimized over
//! `{p in [0,1]^k : sum_j C_j p_j <= B}`.
//!
//! A multilinear function restricted to the budget hyperplane is no longer
//! multilinear (two coordinates traded off along `C_j p_j + C_l p_l = const`
//! give a quadratic), so minima can sit in the relative interior of a face of
//! the polytope. The exact solver enumerates every face: vertices, edges on the
//! budget hyperplane (closed-form quadratic), and for three active attackers
//! the two-dimensional budget face (nested one-dimensional minimization).

use serde::{Deserialize, Serialize};

use super::camouflage::post_layer;
use super::{AttackPlan, PerceptionTable, StepKernel, ValueTable};
use crate::attack::{Appearance, CamouflageScheme};
use crate::error::{CamoError, Result};
use crate::mdp::{JointSpace, PolicyFamily, StageMdp};

/// Largest number of simultaneously active attackers the exact solver takes.
pub const EXACT_LIMIT: usize = 3;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AppearanceMetric {
    /// Appearance values are row-major cells of a board with `cols` columns.
    Manhattan { cols: usize },
    /// Appearance values are positions on a cycle of length `size`.
    Cyclic { size: usize },
    /// 0 for equal values, 1 otherwise.
    Discrete,
}

impl AppearanceMetric {
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        match *self {
            AppearanceMetric::Manhattan { cols } => {
                let cols = cols.max(1);
                let (rx, cx) = (x / cols, x % cols);
                let (ry, cy) = (y / cols, y % cols);
                (rx.abs_diff(ry) + cx.abs_diff(cy)) as f64
            }
            AppearanceMetric::Cyclic { size } => {
                let d = x.abs_diff(y) % size.max(1);
                d.min(size - d) as f64
            }
            AppearanceMetric::Discrete => f64::from(u8::from(x != y)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetModel {
    pub budget: f64,
    pub epsilon: f64,
    pub metric: AppearanceMetric,
}

impl BudgetModel {
    pub fn new(budget: f64, epsilon: f64, metric: AppearanceMetric) -> Result<Self> {
        let model = Self { budget, epsilon, metric };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(CamoError::InvalidBudget(format!("budget must be finite and >= 0, got {}", self.budget)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CamoError::InvalidBudget(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn cost(&self, truth: usize, target: usize) -> f64 {
        self.metric.distance(truth, target) + self.epsilon
    }

    pub fn success_probability(&self, spend: f64, truth: usize, target: usize) -> f64 {
        (spend / self.cost(truth, target)).clamp(0.0, 1.0)
    }

    /// Smallest budget that buys any target for every object with certainty.
    pub fn saturation(&self, scheme: &CamouflageScheme) -> f64 {
        scheme.objects.iter().map(|o| o.domain.iter().map(|&y| self.cost(o.truth, y)).fold(0.0, f64::max)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverMode {
    Exact,
    /// Spend lattice with `resolution` steps of `B / resolution` per attacker.
    Grid {
        resolution: usize,
    },
}

/// Per-step allocation: target appearance, spend and success probability per
/// object (spend and probability are 0 for objects left truthful).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetDecision {
    pub targets: Vec<usize>,
    pub spend: Vec<f64>,
    pub success: Vec<f64>,
    pub value: f64,
}

impl BudgetDecision {
    /// Outcome appearance indices with their probabilities (zero-probability
    /// outcomes dropped).
    pub fn outcomes(&self, scheme: &CamouflageScheme) -> Vec<(f64, usize)> {
        let truth: Vec<usize> = scheme.objects.iter().map(|o| o.truth).collect();
        let active: Vec<usize> =
            (0..truth.len()).filter(|&j| self.targets[j] != truth[j] && self.success[j] > 0.0).collect();
        let mut out = Vec::with_capacity(1 << active.len());
        for mask in 0..1usize << active.len() {
            let mut prob = 1.0;
            let mut values = truth.clone();
            for (bit, &j) in active.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    prob *= self.success[j];
                    values[j] = self.targets[j];
                } else {
                    prob *= 1.0 - self.success[j];
                }
            }
            if prob > 0.0 {
                let y = scheme.index_of(&Appearance(values)).expect("targets lie in their domains");
                out.push((prob, y));
            }
        }
        out
    }
}

/// `sum_mask prod_j (p_j or 1 - p_j) * outcome[mask]`, bit `j` of `mask` set
/// when attacker `j` succeeds.
fn multilinear(outcome: &[f64], p: &[f64]) -> f64 {
    outcome
        .iter()
        .enumerate()
        .map(|(mask, &v)| {
            let w: f64 = p.iter().enumerate().map(|(j, &pj)| if mask >> j & 1 == 1 { pj } else { 1.0 - pj }).product();
            w * v
        })
        .sum()
}

struct Best {
    p: Vec<f64>,
    value: f64,
}

impl Best {
    fn offer(&mut self, outcome: &[f64], p: Vec<f64>) {
        let value = multilinear(outcome, &p);
        if value < self.value {
            *self = Best { p, value };
        }
    }
}

/// Minimum of `phi` on `[lo, hi]` over the ends and, if `phi` is convex
/// quadratic, its stationary point. `phi` is exactly quadratic on the edges
/// this is used for, so three samples identify it.
fn quadratic_candidates(lo: f64, hi: f64, phi: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut xs = vec![lo, hi];
    let h = (hi - lo) / 2.0;
    if h > FEAS_TOL {
        let mid = lo + h;
        let (f0, f1, f2) = (phi(lo), phi(mid), phi(hi));
        let curvature = (f0 - 2.0 * f1 + f2) / (2.0 * h * h);
        let slope = (f2 - f0) / (2.0 * h);
        if curvature > 0.0 {
            let x = mid - slope / (2.0 * curvature);
            if x > lo && x < hi {
                xs.push(x);
            }
        }
    }
    xs
}

/// Exact minimum of the multilinear objective over the budget polytope.
/// Returns the minimizing probabilities (first found on ties, the all-zero
/// point first) and the value. `outcome` has `2^k` entries.
pub fn minimize_multilinear(outcome: &[f64], costs: &[f64], budget: f64) -> Result<(Vec<f64>, f64)> {
    let k = costs.len();
    if outcome.len() != 1 << k {
        return Err(CamoError::Shape(format!("{} outcomes for {k} attackers", outcome.len())));
    }
    if k > EXACT_LIMIT {
        return Err(CamoError::TooManyAttackers { active: k, limit: EXACT_LIMIT });
    }
    let mut best = Best { p: vec![0.0; k], value: multilinear(outcome, &vec![0.0; k]) };
    // Each coordinate fixed at 0, fixed at 1, or free (digit 2). At most two
    // free coordinates on the budget hyperplane for k <= 3, plus the full face.
    for pattern in 0..3usize.pow(k as u32) {
        let digits: Vec<usize> = (0..k).map(|j| pattern / 3usize.pow(j as u32) % 3).collect();
        let free: Vec<usize> = (0..k).filter(|&j| digits[j] == 2).collect();
        let spent: f64 = (0..k).filter(|&j| digits[j] == 1).map(|j| costs[j]).sum();
        let rest = budget - spent;
        if rest < -FEAS_TOL * budget.max(1.0) {
            continue;
        }
        let base: Vec<f64> = digits.iter().map(|&d| if d == 1 { 1.0 } else { 0.0 }).collect();
        match free.as_slice() {
            [] => best.offer(outcome, base),
            [j] => {
                let x = rest / costs[*j];
                if x > 0.0 && x < 1.0 {
                    let mut p = base;
                    p[*j] = x;
                    best.offer(outcome, p);
                }
            }
            [j, l] => {
                let (cj, cl) = (costs[*j], costs[*l]);
                let lo = ((rest - cl) / cj).max(0.0);
                let hi = (rest / cj).min(1.0);
                if hi - lo <= FEAS_TOL {
                    continue;
                }
                let at = |x: f64| {
                    let mut p = base.clone();
                    p[*j] = x;
                    p[*l] = ((rest - cj * x) / cl).clamp(0.0, 1.0);
                    p
                };
                for x in quadratic_candidates(lo, hi, |x| multilinear(outcome, &at(x))) {
                    best.offer(outcome, at(x));
                }
            }
            _ => {
                if let Some(p) = full_face(outcome, costs, rest) {
                    best.offer(outcome, p);
                }
            }
        }
    }
    Ok((best.p, best.value))
}

/// Three free coordinates on `sum_j C_j p_j = rest`: outer search over `p_0`,
/// inner edge minimization over `(p_1, p_2)` in closed form.
fn full_face(outcome: &[f64], costs: &[f64], rest: f64) -> Option<Vec<f64>> {
    let (c0, c1, c2) = (costs[0], costs[1], costs[2]);
    let lo = ((rest - c1 - c2) / c0).max(0.0);
    let hi = (rest / c0).min(1.0);
    if hi - lo <= FEAS_TOL {
        return None;
    }
    let inner = |x0: f64| -> (Vec<f64>, f64) {
        let r = rest - c0 * x0;
        let a = ((r - c2) / c1).max(0.0);
        let b = (r / c1).min(1.0);
        let at = |x1: f64| vec![x0, x1, ((r - c1 * x1) / c2).clamp(0.0, 1.0)];
        let mut best = (at(a.min(b)), f64::INFINITY);
        if b >= a {
            for x1 in quadratic_candidates(a, b, |x1| multilinear(outcome, &at(x1))) {
                let p = at(x1);
                let v = multilinear(outcome, &p);
                if v < best.1 {
                    best = (p, v);
                }
            }
        }
        best
    };
    const SAMPLES: usize = 128;
    let step = (hi - lo) / SAMPLES as f64;
    let (mut arg, mut val) = (0, f64::INFINITY);
    for i in 0..=SAMPLES {
        let v = inner(lo + step * i as f64).1;
        if v < val {
            arg = i;
            val = v;
        }
    }
    // golden-section refinement around the best sample
    let mut a = lo + step * arg.saturating_sub(1) as f64;
    let mut b = (lo + step * (arg + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if inner(x1).1 <= inner(x2).1 {
            b = x2;
        } else {
            a = x1;
        }
    }
    let refined = inner((a + b) / 2.0);
    let sampled = inner(lo + step * arg as f64);
    Some(if refined.1 <= sampled.1 { refined.0 } else { sampled.0 })
}

/// Spend lattice search: `b_j in {0, B/r, ..., B}`, `sum_j b_j <= B`.
fn grid_minimize(outcome: &[f64], costs: &[f64], budget: f64, resolution: usize) -> (Vec<f64>, f64) {
    let k = costs.len();
    let r = resolution.max(1);
    let mut best = Best { p: vec![0.0; k], value: multilinear(outcome, &vec![0.0; k]) };
    if budget <= 0.0 {
        return (best.p, best.value);
    }
    let mut units = vec![0usize; k];
    loop {
        if units.iter().sum::<usize>() <= r {
            let p: Vec<f64> =
                units.iter().zip(costs).map(|(&u, &c)| (budget * u as f64 / r as f64 / c).min(1.0)).collect();
            best.offer(outcome, p);
        }
        let mut j = 0;
        loop {
            if j == k {
                return (best.p, best.value);
            }
            units[j] += 1;
            if units[j] <= r {
                break;
            }
            units[j] = 0;
            j += 1;
        }
    }
}

/// Solves the within-step problem for one row of post-attack values (one entry
/// per appearance index) over every target assignment.
pub fn optimize_row(
    values: &[f64],
    scheme: &CamouflageScheme,
    model: &BudgetModel,
    mode: SolverMode,
) -> Result<BudgetDecision> {
    model.validate()?;
    let ny = scheme.num_appearances();
    if values.len() != ny {
        return Err(CamoError::Shape(format!("{} values for {ny} appearances", values.len())));
    }
    let truth: Vec<usize> = scheme.objects.iter().map(|o| o.truth).collect();
    let m = truth.len();
    let identity = scheme.identity_index();
    let mut best =
        BudgetDecision { targets: truth.clone(), spend: vec![0.0; m], success: vec![0.0; m], value: values[identity] };
    for y in 0..ny {
        let targets = scheme.appearance(y).0;
        let active: Vec<usize> = (0..m).filter(|&j| targets[j] != truth[j]).collect();
        if active.is_empty() {
            continue;
        }
        let costs: Vec<f64> = active.iter().map(|&j| model.cost(truth[j], targets[j])).collect();
        let outcome: Vec<f64> = (0..1usize << active.len())
            .map(|mask| {
                let mut vals = truth.clone();
                for (bit, &j) in active.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        vals[j] = targets[j];
                    }
                }
                values[scheme.index_of(&Appearance(vals)).expect("subset of a valid appearance")]
            })
            .collect();
        let (p, value) = match mode {
            SolverMode::Exact => minimize_multilinear(&outcome, &costs, model.budget)?,
            SolverMode::Grid { resolution } => grid_minimize(&outcome, &costs, model.budget, resolution),
        };
        if value < best.value {
            let mut spend = vec![0.0; m];
            let mut success = vec![0.0; m];
            for (bit, &j) in active.iter().enumerate() {
                spend[j] = p[bit] * costs[bit];
                success[j] = p[bit];
            }
            best = BudgetDecision { targets, spend, success, value };
        }
    }
    Ok(best)
}

/// Within-step optimization at joint state `joint` of a post-attack layer laid
/// out as `joint * num_appearances + y`.
pub fn within_step_optimize(
    layer: &[f64],
    joint: usize,
    scheme: &CamouflageScheme,
    model: &BudgetModel,
    mode: SolverMode,
) -> Result<BudgetDecision> {
    let ny = scheme.num_appearances();
    let row = layer
        .get(joint * ny..(joint + 1) * ny)
        .ok_or_else(|| CamoError::Shape(format!("layer has no row for joint state {joint}")))?;
    optimize_row(row, scheme, model, mode)
}

/// Between-step DP with the exact within-step solver at every pre-attack state.
/// The budget refills at every step.
pub fn plan_budgeted_camouflage(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    model: &BudgetModel,
    n: usize,
) -> Result<(AttackPlan, ValueTable)> {
    use rayon::prelude::*;

    model.validate()?;
    let ny = scheme.num_appearances();
    let space = JointSpace::new(n, mdp.num_states());
    let horizon = mdp.horizon();
    let table = PerceptionTable::new(scheme, n);
    let mut pre = vec![Vec::new(); horizon + 1];
    let mut post = vec![Vec::new(); horizon];
    let mut choices = vec![Vec::new(); horizon];
    pre[horizon] = vec![0.0; space.size()];
    for step in (1..=horizon).rev() {
        let kernel = StepKernel::new(mdp, step);
        let layer = post_layer(policy, &table, &kernel, &space, step, &pre[step], None);
        let decisions = layer
            .par_chunks(ny)
            .map(|row| optimize_row(row, scheme, model, SolverMode::Exact))
            .collect::<Result<Vec<_>>>()?;
        pre[step - 1] = decisions.iter().map(|d| d.value).collect();
        choices[step - 1] = decisions;
        post[step - 1] = layer;
    }
    Ok((
        AttackPlan::Budgeted { choices },
        ValueTable { horizon, num_joint: space.size(), num_appearances: ny, pre, post },
    ))
}
