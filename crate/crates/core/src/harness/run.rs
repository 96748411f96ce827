use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ModeName, Resolved, Source};
use super::format_number;
use crate::attack::RotationSign;
use crate::bounds::theorem1_check;
use crate::env::{EnvSpec, RewardRows};
use crate::error::Result;
use crate::mdp::expected_reward_with_policy;
use crate::planners::{simulate_rollouts, AppearanceMetric, AttackMode, BudgetModel, Instance, ModeRun};

/// Command-line overrides; `None` keeps the config value.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub episodes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// First failure witness, or a short note when passing.
    pub detail: String,
}

#[derive(Debug, Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn record(&mut self, name: &str, passed: bool, detail: impl FnOnce() -> String) {
        match self.0.iter_mut().find(|c| c.name == name) {
            Some(c) if c.passed && !passed => {
                c.passed = false;
                c.detail = detail();
            }
            Some(_) => {}
            None => {
                self.0.push(Check { name: name.into(), passed, detail: if passed { String::new() } else { detail() } })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: String,
    pub final_value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientationRow {
    pub sign: RotationSign,
    pub reward_rows: RewardRows,
    pub no_attack: f64,
    pub camouflage_ratio: f64,
    pub state_perception_ratio: f64,
    /// Largest deviation from the reference ratios, when given.
    pub deviation: Option<f64>,
    pub within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub epsilon: f64,
    pub budget: f64,
    pub final_value: f64,
    pub ratio: f64,
    pub camouflage_final: f64,
    pub matches_camouflage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutRow {
    pub mode: String,
    pub episodes: u64,
    pub mean: f64,
    pub std_error: f64,
    pub exact: f64,
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub columns: Vec<(String, Vec<f64>)>,
    pub summary: Vec<SummaryRow>,
    pub orientation: Vec<OrientationRow>,
    pub closest_orientation: Option<OrientationRow>,
    pub sensitivity: Vec<SensitivityRow>,
    pub rollouts: Vec<RolloutRow>,
    pub bounds_rows: usize,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.0 == name).map(|c| c.1.as_slice())
    }

    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|r| r.mode == name).map(|r| r.ratio)
    }
}

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + TOL * (1.0 + a.abs().max(b.abs()))
}

/// Output directory: command line, then `CAMO_OUT_DIR`, then config, then
/// `out`.
pub fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| std::env::var_os("CAMO_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct Unit {
    label: String,
    instance: Instance,
    init: Vec<f64>,
    base: [Option<ModeRun>; 3],
    budgets: Vec<ModeRun>,
}

fn base_modes(cfg: &ExperimentConfig) -> [Option<AttackMode>; 3] {
    let want = |m: ModeName| cfg.modes.contains(&m);
    [
        want(ModeName::None).then_some(AttackMode::NoAttack),
        want(ModeName::Camouflage).then_some(AttackMode::Camouflage),
        want(ModeName::Spa).then_some(AttackMode::StatePerception),
    ]
}

fn budget_modes(cfg: &ExperimentConfig, res: &Resolved, epsilon: f64) -> Result<Vec<AttackMode>> {
    if !cfg.modes.contains(&ModeName::Budgeted) && cfg.budgets.is_empty() {
        return Ok(Vec::new());
    }
    cfg.budgets.iter().map(|&b| Ok(AttackMode::Budgeted(BudgetModel::new(b, epsilon, res.metric())?))).collect()
}

fn solve_unit(
    label: String,
    instance: Instance,
    n: usize,
    cfg: &ExperimentConfig,
    budgets: &[AttackMode],
) -> Result<Unit> {
    let init = cfg.init.distribution(&instance.space(n))?;
    let base = base_modes(cfg);
    let runs: Vec<Option<ModeRun>> =
        base.par_iter().map(|m| m.as_ref().map(|m| instance.run(n, m, &init)).transpose()).collect::<Result<_>>()?;
    let budget_runs = budgets.par_iter().map(|m| instance.run(n, m, &init)).collect::<Result<Vec<_>>>()?;
    let mut it = runs.into_iter();
    let base = [it.next().flatten(), it.next().flatten(), it.next().flatten()];
    Ok(Unit { label, instance, init, base, budgets: budget_runs })
}

fn check_unit(unit: &Unit, n: usize, budgets: &[f64], checks: &mut Checks) -> Result<()> {
    let at = |what: &str, t: usize, s: usize| format!("{}: {what} at t={t}, joint state {s}", unit.label);
    let [none, ca, spa] = &unit.base;
    if let Some(none) = none {
        let baseline = expected_reward_with_policy(&unit.instance.mdp, &unit.instance.policy, n, &unit.init)?;
        let bad = none.trajectory.iter().zip(&baseline).position(|(a, b)| !close(*a, *b, TOL));
        checks.record("no_attack_matches_baseline", bad.is_none(), || {
            format!("{}: time index {}", unit.label, bad.unwrap_or(0))
        });
    }
    let all = unit.base.iter().flatten().chain(&unit.budgets);
    for run in all {
        let exact = run.values.initial_value(&unit.init);
        let last = *run.trajectory.last().expect("trajectory has index 0");
        checks.record("forward_consistency", close(last, exact, TOL), || {
            format!("{}: trajectory end {last} vs value {exact}", unit.label)
        });
    }
    let pairs = [("state_perception <= camouflage", spa, ca), ("camouflage <= no_attack", ca, none)];
    for (name, lo, hi) in pairs {
        if let (Some(lo), Some(hi)) = (lo, hi) {
            let witness = first_violation(&lo.values.pre, &hi.values.pre);
            checks.record(&format!("ordering: {name}"), witness.is_none(), || {
                let (t, s) = witness.unwrap_or_default();
                at(name, t, s)
            });
            let (a, b) = (*lo.trajectory.last().unwrap(), *hi.trajectory.last().unwrap());
            checks.record(&format!("final ordering: {name}"), leq(a, b), || format!("{}: {a} > {b}", unit.label));
        }
    }
    let mut order: Vec<usize> = (0..unit.budgets.len()).collect();
    order.sort_by(|&i, &j| budgets[i].total_cmp(&budgets[j]));
    for w in order.windows(2) {
        let (small, large) = (&unit.budgets[w[0]], &unit.budgets[w[1]]);
        let witness = first_violation(&large.values.pre, &small.values.pre);
        checks.record("budget monotonicity", witness.is_none(), || {
            let (t, s) = witness.unwrap_or_default();
            at(&format!("B={} above B={}", budgets[w[1]], budgets[w[0]]), t, s)
        });
    }
    for (run, &b) in unit.budgets.iter().zip(budgets) {
        if let Some(ca) = ca {
            let w = first_violation(&ca.values.pre, &run.values.pre);
            checks.record("camouflage <= budgeted", w.is_none(), || {
                let (t, s) = w.unwrap_or_default();
                at(&format!("B={b}"), t, s)
            });
        }
        if let Some(none) = none {
            let w = first_violation(&run.values.pre, &none.values.pre);
            checks.record("budgeted <= no_attack", w.is_none(), || {
                let (t, s) = w.unwrap_or_default();
                at(&format!("B={b}"), t, s)
            });
        }
    }
    Ok(())
}

/// First `(t, joint)` with `lo > hi` beyond tolerance.
fn first_violation(lo: &[Vec<f64>], hi: &[Vec<f64>]) -> Option<(usize, usize)> {
    for (t, (a, b)) in lo.iter().zip(hi).enumerate() {
        if let Some(s) = a.iter().zip(b).position(|(x, y)| !leq(*x, *y)) {
            return Some((t, s));
        }
    }
    None
}

fn saturation_check(units: &[Unit], cfg: &ExperimentConfig, metric: AppearanceMetric, checks: &mut Checks) {
    for unit in units {
        let Some(ca) = &unit.base[1] else { return };
        for (run, &b) in unit.budgets.iter().zip(&cfg.budgets) {
            let model = BudgetModel { budget: b, epsilon: cfg.epsilon, metric };
            if b < model.saturation(&unit.instance.scheme) {
                continue;
            }
            let w = ca
                .values
                .pre
                .iter()
                .flatten()
                .zip(run.values.pre.iter().flatten())
                .position(|(x, y)| !close(*x, *y, TOL));
            checks.record("budget saturation", w.is_none(), || format!("{}: B={b}, flat index {w:?}", unit.label));
        }
    }
}

fn average(units: &[Unit], pick: impl Fn(&Unit) -> Option<&ModeRun>) -> Option<Vec<f64>> {
    let runs: Vec<&ModeRun> = units.iter().filter_map(&pick).collect();
    if runs.is_empty() {
        return None;
    }
    let len = runs[0].trajectory.len();
    let mut mean = vec![0.0; len];
    for r in &runs {
        for (m, v) in mean.iter_mut().zip(&r.trajectory) {
            *m += v / runs.len() as f64;
        }
    }
    Some(mean)
}

fn build_units(res: &Resolved, cfg: &ExperimentConfig, budgets: &[AttackMode]) -> Result<Vec<Unit>> {
    let n = res.recipients;
    match &res.sweep {
        Some(set) => set
            .par_iter()
            .map(|p| {
                let label = p.iter().map(|(r, c)| format!("({r},{c})")).collect::<Vec<_>>().join(";");
                solve_unit(label, res.instance(Some(p), cfg.spa_widen)?, n, cfg, budgets)
            })
            .collect(),
        None => Ok(vec![solve_unit(res.name.clone(), res.instance(None, cfg.spa_widen)?, n, cfg, budgets)?]),
    }
}

fn orientation_rows(res: &Resolved, cfg: &ExperimentConfig) -> Result<Vec<OrientationRow>> {
    let Source::Env(EnvSpec::Ring(base)) = &res.source else { return Ok(Vec::new()) };
    let combos = [
        (RotationSign::Plus, RewardRows::Destination),
        (RotationSign::Minus, RewardRows::Destination),
        (RotationSign::Plus, RewardRows::Origin),
        (RotationSign::Minus, RewardRows::Origin),
    ];
    let n = res.recipients;
    combos
        .par_iter()
        .map(|&(sign, rows)| {
            let env = EnvSpec::Ring(crate::env::RingSpec { sign, reward_rows: rows, ..base.clone() });
            let inst = env.instance(cfg.spa_widen)?;
            let init = cfg.init.distribution(&inst.space(n))?;
            let fin = |m: &AttackMode| -> Result<f64> { Ok(*inst.run(n, m, &init)?.trajectory.last().unwrap()) };
            let none = fin(&AttackMode::NoAttack)?;
            let ca = fin(&AttackMode::Camouflage)? / none;
            let spa = fin(&AttackMode::StatePerception)? / none;
            let deviation = cfg.target_ratios.map(|[a, b]| (ca - a).abs().max((spa - b).abs()));
            Ok(OrientationRow {
                sign,
                reward_rows: rows,
                no_attack: none,
                camouflage_ratio: ca,
                state_perception_ratio: spa,
                deviation,
                within_tolerance: deviation.map(|d| d <= cfg.target_tolerance),
            })
        })
        .collect()
}

fn csv_line(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn num(x: f64) -> String {
    format_number(x)
}

/// Runs every enabled mode, writes the CSV tables and manifest into the output
/// directory, and reports invariant checks.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(e) = opts.episodes {
        cfg.rollout_episodes = e;
    }
    let out_dir = output_dir(&cfg, opts);
    let res = cfg.resolve()?;
    let budget_list = budget_modes(&cfg, &res, cfg.epsilon)?;
    let units = build_units(&res, &cfg, &budget_list)?;
    let n = res.recipients;
    let mut checks = Checks::default();
    if cfg.check_invariants {
        for unit in &units {
            check_unit(unit, n, &cfg.budgets, &mut checks)?;
        }
        saturation_check(&units, &cfg, res.metric(), &mut checks);
    }

    let names = ["no_attack", "camouflage", "state_perception"];
    let mut columns: Vec<(String, Option<Vec<f64>>)> =
        (0..3).map(|k| (names[k].to_string(), average(&units, |u| u.base[k].as_ref()))).collect();
    for (k, b) in cfg.budgets.iter().enumerate() {
        if !budget_list.is_empty() {
            columns.push((format!("budget_{}", num(*b)), average(&units, |u| u.budgets.get(k))));
        }
    }
    let horizon = res.horizon();
    let none_final = columns[0].1.as_ref().map(|c| c[horizon]);
    let summary: Vec<SummaryRow> = columns
        .iter()
        .filter_map(|(name, col)| {
            let col = col.as_ref()?;
            let f = col[horizon];
            let ratio = none_final.map_or(f64::NAN, |z| if z == 0.0 { f64::NAN } else { f / z });
            Some(SummaryRow { mode: name.clone(), final_value: f, ratio })
        })
        .collect();
    let budget_finals: Vec<f64> =
        summary.iter().filter(|r| r.mode.starts_with("budget_")).map(|r| r.final_value).collect();
    if cfg.check_invariants && !budget_finals.is_empty() {
        let mut pairs: Vec<(f64, f64)> = cfg.budgets.iter().copied().zip(budget_finals.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bad = pairs.windows(2).find(|w| !leq(w[1].1, w[0].1));
        checks.record("budget final values non-increasing", bad.is_none(), || format!("{bad:?}"));
    }

    // one-step gap table
    let mut bounds_csv = String::new();
    let mut bounds_rows = 0;
    if cfg.bounds {
        csv_line(&mut bounds_csv, &["instance", "step", "joint_state", "o1", "o2", "bound", "holds"].map(String::from));
        for unit in &units {
            let inst = &unit.instance;
            let space = inst.space(n);
            for step in 1..=inst.mdp.horizon() {
                for joint in 0..space.size() {
                    let states = space.decode(joint);
                    let label = states.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("|");
                    match theorem1_check(&inst.mdp, &inst.policy, &inst.scheme, step, &states) {
                        Ok(r) => {
                            checks.record("one-step gap bound", r.holds, || {
                                format!("{}: step {step}, states {label}", unit.label)
                            });
                            csv_line(
                                &mut bounds_csv,
                                &[
                                    unit.label.clone(),
                                    step.to_string(),
                                    label,
                                    num(r.o1),
                                    num(r.o2),
                                    num(r.bound),
                                    r.holds.to_string(),
                                ],
                            );
                            bounds_rows += 1;
                        }
                        Err(e) => checks.record("one-step gap bound", false, || format!("{}: {e}", unit.label)),
                    }
                }
            }
        }
    }

    let orientation = if cfg.orientation_report { orientation_rows(&res, &cfg)? } else { Vec::new() };
    let closest_orientation = orientation
        .iter()
        .filter(|r| r.deviation.is_some())
        .min_by(|a, b| a.deviation.unwrap().total_cmp(&b.deviation.unwrap()))
        .cloned();

    // epsilon sensitivity of the budget sweep
    let mut sensitivity = Vec::new();
    if !cfg.epsilon_sensitivity.is_empty() && !cfg.budgets.is_empty() {
        let ca_final = summary.iter().find(|r| r.mode == "camouflage").map(|r| r.final_value);
        for &eps in &cfg.epsilon_sensitivity {
            let modes = budget_modes(&cfg, &res, eps)?;
            let eps_cfg = ExperimentConfig { modes: vec![ModeName::Budgeted], ..cfg.clone() };
            let eps_units = build_units(&res, &eps_cfg, &modes)?;
            for (k, &b) in cfg.budgets.iter().enumerate() {
                let f = average(&eps_units, |u| u.budgets.get(k)).map_or(f64::NAN, |c| c[horizon]);
                let ratio = none_final.map_or(f64::NAN, |z| f / z);
                let camouflage_final = ca_final.unwrap_or(f64::NAN);
                sensitivity.push(SensitivityRow {
                    epsilon: eps,
                    budget: b,
                    final_value: f,
                    ratio,
                    camouflage_final,
                    matches_camouflage: (f - camouflage_final).abs() <= 1e-6,
                });
            }
        }
    }

    // Monte Carlo cross-check of the exact trajectories
    let mut rollouts = Vec::new();
    if cfg.rollout_episodes > 0 {
        for unit in &units {
            let labelled = names
                .iter()
                .zip(&unit.base)
                .filter_map(|(name, r)| r.as_ref().map(|r| (name.to_string(), r)))
                .chain(cfg.budgets.iter().zip(&unit.budgets).map(|(b, r)| (format!("budget_{}", num(*b)), r)));
            for (mode, run) in labelled {
                let inst = &unit.instance;
                let stats = simulate_rollouts(
                    &inst.mdp,
                    &inst.policy,
                    &inst.scheme,
                    &run.plan,
                    n,
                    &unit.init,
                    cfg.rollout_episodes,
                    cfg.seed,
                )?;
                let exact = *run.trajectory.last().unwrap();
                let ok = (stats.mean - exact).abs() <= 4.0 * stats.std_error + 1e-9 * (1.0 + exact.abs());
                checks.record("rollouts within 4 standard errors", ok, || {
                    format!("{} {mode}: mean {} vs exact {exact} (se {})", unit.label, stats.mean, stats.std_error)
                });
                rollouts.push(RolloutRow {
                    mode: if units.len() > 1 { format!("{}:{mode}", unit.label) } else { mode },
                    episodes: stats.episodes,
                    mean: stats.mean,
                    std_error: stats.std_error,
                    exact,
                    success_rate: stats.success_rate(),
                });
            }
        }
    }

    let report = RunReport {
        name: res.name.clone(),
        out_dir: out_dir.clone(),
        columns: columns.iter().filter_map(|(n, c)| c.clone().map(|c| (n.clone(), c))).collect(),
        summary,
        orientation,
        closest_orientation,
        sensitivity,
        rollouts,
        bounds_rows,
        checks: checks.0,
    };
    write_outputs(&out_dir, &cfg, &res, &columns, &report, &bounds_csv)?;
    Ok(report)
}

fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    res: &Resolved,
    columns: &[(String, Option<Vec<f64>>)],
    report: &RunReport,
    bounds_csv: &str,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec!["trajectories.csv", "summary.csv", "checks.csv"];

    let mut traj = String::new();
    let mut header = vec!["time_index".to_string()];
    header.extend(columns.iter().map(|c| c.0.clone()));
    csv_line(&mut traj, &header);
    for t in 0..=res.horizon() {
        let mut row = vec![t.to_string()];
        row.extend(columns.iter().map(|(_, c)| c.as_ref().map_or(String::new(), |c| num(c[t]))));
        csv_line(&mut traj, &row);
    }
    std::fs::write(dir.join("trajectories.csv"), traj)?;

    let mut summary = String::from("mode,final_value,ratio_vs_no_attack\n");
    for r in &report.summary {
        csv_line(&mut summary, &[r.mode.clone(), num(r.final_value), num(r.ratio)]);
    }
    std::fs::write(dir.join("summary.csv"), summary)?;

    let mut checks = String::from("check,passed,detail\n");
    for c in &report.checks {
        csv_line(
            &mut checks,
            &[format!("\"{}\"", c.name), c.passed.to_string(), format!("\"{}\"", c.detail.replace('"', "'"))],
        );
    }
    std::fs::write(dir.join("checks.csv"), checks)?;

    if !bounds_csv.is_empty() {
        std::fs::write(dir.join("bounds.csv"), bounds_csv)?;
        files.push("bounds.csv");
    }
    if !report.orientation.is_empty() {
        let mut s = String::from(
            "sign,reward_rows,no_attack,camouflage_ratio,state_perception_ratio,deviation,within_tolerance\n",
        );
        for r in &report.orientation {
            csv_line(
                &mut s,
                &[
                    format!("{:?}", r.sign).to_lowercase(),
                    format!("{:?}", r.reward_rows).to_lowercase(),
                    num(r.no_attack),
                    num(r.camouflage_ratio),
                    num(r.state_perception_ratio),
                    r.deviation.map_or(String::new(), num),
                    r.within_tolerance.map_or(String::new(), |b| b.to_string()),
                ],
            );
        }
        std::fs::write(dir.join("orientation.csv"), s)?;
        files.push("orientation.csv");
    }
    if !report.sensitivity.is_empty() {
        let mut s = String::from("epsilon,budget,final_value,ratio_vs_no_attack,camouflage_final,matches_camouflage\n");
        for r in &report.sensitivity {
            csv_line(
                &mut s,
                &[
                    num(r.epsilon),
                    num(r.budget),
                    num(r.final_value),
                    num(r.ratio),
                    num(r.camouflage_final),
                    r.matches_camouflage.to_string(),
                ],
            );
        }
        std::fs::write(dir.join("budget_sensitivity.csv"), s)?;
        files.push("budget_sensitivity.csv");
    }
    if !report.rollouts.is_empty() {
        let mut s = String::from("mode,episodes,mean,std_error,exact,success_rate\n");
        for r in &report.rollouts {
            csv_line(
                &mut s,
                &[
                    r.mode.clone(),
                    r.episodes.to_string(),
                    num(r.mean),
                    num(r.std_error),
                    num(r.exact),
                    r.success_rate.map_or(String::new(), num),
                ],
            );
        }
        std::fs::write(dir.join("rollouts.csv"), s)?;
        files.push("rollouts.csv");
    }
    files.push("manifest.json");

    #[derive(Serialize)]
    struct Manifest<'a> {
        tool: &'static str,
        version: &'static str,
        config: &'a ExperimentConfig,
        resolved: &'a Resolved,
        horizon: usize,
        report: &'a RunReport,
        passed: bool,
        files: Vec<&'static str>,
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        resolved: res,
        horizon: res.horizon(),
        report,
        passed: report.passed(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Short human-readable digest of a report.
pub fn describe(report: &RunReport) -> String {
    let mut s = String::new();
    for r in &report.summary {
        let _ = writeln!(s, "{:<18} final {:>12}  ratio {}", r.mode, num(r.final_value), num(r.ratio));
    }
    for c in &report.checks {
        let _ = writeln!(
            s,
            "[{}] {}{}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            if c.passed { String::new() } else { format!(": {}", c.detail) }
        );
    }
    s
}
