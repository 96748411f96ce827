//! Gap between a shared minimizer and independent minimizers.
//!
//! For functions `f_1..f_n` on one finite domain, forcing a common argument
//! costs at most `min_j sum_{i != j} (f_i(x_j*) - f_i(x_i*))`. Applied to the
//! one-step expected rewards of recipients under every appearance, this
//! bounds how much less a camouflage attacker achieves than a free
//! per-agent perception attacker in one step.

use serde::Serialize;

use crate::attack::CamouflageScheme;
use crate::error::{CamoError, Result};
use crate::mdp::{PolicyFamily, StageMdp};

/// Relative slack for the floating-point comparisons in `holds`.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// Shared-argument optimum `min_x sum_i f_i(x)`.
    pub o1: f64,
    /// Independent optimum `sum_i min_x f_i(x)`.
    pub o2: f64,
    /// `min_j C_j`.
    pub bound: f64,
    /// `C_j` per function.
    pub per_function: Vec<f64>,
    /// Per-function minimizers, lowest index on ties.
    pub minimizers: Vec<usize>,
    /// Shared minimizer, lowest index on ties.
    pub shared: usize,
    /// Index `j` attaining the bound.
    pub witness: usize,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub holds: bool,
}

fn argmin_lowest(f: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in f.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Exhaustive gap report for `functions[i][x]`.
pub fn lemma1_gap(functions: &[Vec<f64>]) -> Result<GapReport> {
    let first = functions.first().ok_or_else(|| CamoError::Shape("no functions".into()))?;
    let d = first.len();
    if d == 0 {
        return Err(CamoError::Shape("empty domain".into()));
    }
    if let Some(i) = functions.iter().position(|f| f.len() != d) {
        return Err(CamoError::Shape(format!("function {i} has {} points, expected {d}", functions[i].len())));
    }
    if functions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CamoError::Shape("non-finite function value".into()));
    }
    let sums: Vec<f64> = (0..d).map(|x| functions.iter().map(|f| f[x]).sum()).collect();
    let (shared, o1) = argmin_lowest(&sums);
    let mins: Vec<(usize, f64)> = functions.iter().map(|f| argmin_lowest(f)).collect();
    let o2: f64 = mins.iter().map(|m| m.1).sum();
    let per_function: Vec<f64> = (0..functions.len())
        .map(|j| {
            let xj = mins[j].0;
            functions.iter().zip(&mins).enumerate().filter(|&(i, _)| i != j).map(|(_, (f, m))| f[xj] - m.1).sum()
        })
        .collect();
    let (witness, bound) = argmin_lowest(&per_function);
    let scale = GAP_TOL * (1.0 + o1.abs().max(o2.abs()));
    let lower_holds = o2 <= o1 + scale;
    let upper_holds = o1 <= o2 + bound + scale;
    Ok(GapReport {
        o1,
        o2,
        bound,
        per_function,
        minimizers: mins.iter().map(|m| m.0).collect(),
        shared,
        witness,
        lower_holds,
        upper_holds,
        holds: lower_holds && upper_holds,
    })
}

/// `f_i(y)`: one-step expected true reward of agent `i` at step `step` when
/// it acts on its perception under appearance `y`.
pub fn one_step_rewards(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    step: usize,
    states: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if step == 0 || step > mdp.horizon() {
        return Err(CamoError::Shape(format!("step {step} outside 1..={}", mdp.horizon())));
    }
    if let Some(&s) = states.iter().find(|&&s| s >= mdp.num_states()) {
        return Err(CamoError::OutOfDomain(format!("state {s}")));
    }
    let c = mdp.true_config();
    Ok(states
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            (0..scheme.num_appearances())
                .map(|y| {
                    let p = scheme.perception_of(y, i, s);
                    mdp.expected_reward(c, step, s, policy.action(p.env_config, step - 1, p.own_state))
                })
                .collect()
        })
        .collect())
}

fn require_shared(scheme: &CamouflageScheme) -> Result<()> {
    if scheme.shared_observation() {
        Ok(())
    } else {
        Err(CamoError::Hypothesis("observation functions differ across agents".into()))
    }
}

/// `C_ij = f_i(y_j*) - f_i(y_i*)` with `y_i*` agent `i`'s own worst
/// appearance (lowest index on ties).
pub fn cij_matrix(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    step: usize,
    states: &[usize],
) -> Result<Vec<Vec<f64>>> {
    require_shared(scheme)?;
    let f = one_step_rewards(mdp, policy, scheme, step, states)?;
    let mins: Vec<(usize, f64)> = f.iter().map(|fi| argmin_lowest(fi)).collect();
    Ok(f.iter().zip(&mins).map(|(fi, mi)| mins.iter().map(|mj| fi[mj.0] - mi.1).collect()).collect())
}

/// One-step comparison at `step` and joint state `states`: `o1` is the shared
/// camouflage optimum, `o2` the per-agent optimum, `bound` is
/// `min_j sum_{i != j} C_ij`.
pub fn theorem1_check(
    mdp: &StageMdp,
    policy: &PolicyFamily,
    scheme: &CamouflageScheme,
    step: usize,
    states: &[usize],
) -> Result<GapReport> {
    require_shared(scheme)?;
    lemma1_gap(&one_step_rewards(mdp, policy, scheme, step, states)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_ring, RingSpec};
    use crate::mdp::solve_policy_family;

    #[test]
    fn identical_functions_no_gap() {
        let r = lemma1_gap(&[vec![3.0, 1.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(r.o1, r.o2);
        assert!(r.per_function.iter().all(|&c| c >= 0.0));
        assert!(r.holds);
    }

    #[test]
    fn opposed_parabolas() {
        let r = lemma1_gap(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!((r.o1, r.o2, r.bound), (1.0, 0.0, 1.0));
        assert_eq!(r.per_function, vec![1.0, 1.0]);
        assert!(r.holds);
    }

    #[test]
    fn domain_mismatch() {
        assert!(lemma1_gap(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn cij_same_state_is_zero_and_single_agent() {
        let (mdp, scheme) = build_ring(&RingSpec::default()).unwrap();
        let policy = solve_policy_family(&mdp).unwrap();
        let c = cij_matrix(&mdp, &policy, &scheme, 5, &[1, 1, 1]).unwrap();
        assert!(c.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(cij_matrix(&mdp, &policy, &scheme, 3, &[2]).unwrap(), vec![vec![0.0]]);
    }
}
