//! The five experiment protocols. Each returns typed results that the
//! output layer turns into CSV rows and a JSON summary.

use std::collections::BTreeMap;

use dpbandit::PolicyKind;
use log::warn;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{BenchError, Result};
use crate::output::Table;
use crate::sim::{build_policy, simulate, NoiseMode, Resolved, RunTrace, World};
use crate::stats::MeanStd;

/// One policy's trace in one seeded run.
#[derive(Debug, Clone)]
pub struct Cell {
    pub run_id: u64,
    pub policy: PolicyKind,
    pub trace: RunTrace,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub table: Table,
    pub summary: Value,
    pub lambda0: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs every `(run, policy)` cell in parallel with the given noise mode.
pub fn run_cells(
    cfg: &ExperimentConfig,
    world: &World,
    res: &Resolved,
    policies: &[PolicyKind],
    noise: NoiseMode,
) -> Result<Vec<Cell>> {
    let jobs: Vec<(u64, PolicyKind)> = (0..cfg.runs as u64)
        .flat_map(|r| policies.iter().map(move |&p| (r, p)))
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(run_id, policy)| {
            let mut env = world.env(cfg.master_seed, run_id)?;
            let mut agent = build_policy(policy, res, world.dim(), cfg.master_seed, run_id, noise)?;
            let trace = simulate(env.as_mut(), agent.as_mut(), cfg.horizon, cfg.clip_rewards)?;
            Ok(Cell { run_id, policy, trace })
        })
        .collect::<Result<Vec<_>>>()?;
    let clipped: usize = cells.iter().map(|c| c.trace.clipped).sum();
    if clipped > 0 {
        warn!("clipped {clipped} rewards to [-1, 1] before feeding private policies");
    }
    Ok(cells)
}

fn final_summary(cells: &[Cell], policies: &[PolicyKind], f: impl Fn(&RunTrace) -> f64) -> Value {
    let mut out = serde_json::Map::new();
    for &p in policies {
        let xs: Vec<f64> = cells.iter().filter(|c| c.policy == p).map(|c| f(&c.trace)).collect();
        out.insert(p.name().into(), json!(MeanStd::of(&xs)));
    }
    Value::Object(out)
}

pub fn run_regret(cfg: &ExperimentConfig, world: &World) -> Result<(Outcome, Vec<Cell>)> {
    trajectory_experiment(cfg, world, ExperimentKind::Regret)
}

pub fn run_param_error(cfg: &ExperimentConfig, world: &World) -> Result<(Outcome, Vec<Cell>)> {
    trajectory_experiment(cfg, world, ExperimentKind::ParamError)
}

fn trajectory_experiment(
    cfg: &ExperimentConfig,
    world: &World,
    kind: ExperimentKind,
) -> Result<(Outcome, Vec<Cell>)> {
    let res = Resolved::new(cfg, world);
    let cells = run_cells(cfg, world, &res, &cfg.policies, NoiseMode::Laplace)?;
    let mut table = Table::new(&["run_id", "policy", "t", "cum_regret", "param_error", "selected_arm"]);
    let first = if kind == ExperimentKind::ParamError { 0 } else { 1 };
    for c in &cells {
        for t in first..=cfg.horizon {
            let regret = if t == 0 { Some(0.0) } else { c.trace.cum_regret.get(t - 1).copied() };
            let arm = if t == 0 { String::new() } else { c.trace.selected[t - 1].to_string() };
            table.push(vec![
                c.run_id.to_string(),
                c.policy.name().into(),
                t.to_string(),
                fmt_opt(regret),
                fmt_opt(c.trace.param_error.get(t).copied()),
                arm,
            ]);
        }
    }
    let summary = json!({
        "final_regret": final_summary(&cells, &cfg.policies, RunTrace::final_regret),
        "final_param_error": final_summary(&cells, &cfg.policies, RunTrace::final_param_error),
    });
    Ok((Outcome { kind, table, summary, lambda0: world.lambda0 }, cells))
}

/// Cumulative reward of the uniform policy on the same pools, per run.
fn random_normalizer(cfg: &ExperimentConfig, world: &World, res: &Resolved, cells: &[Cell]) -> Result<Vec<Vec<f64>>> {
    (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run_id| {
            if let Some(c) = cells.iter().find(|c| c.run_id == run_id && c.policy == PolicyKind::Random) {
                return Ok(c.trace.cum_reward.clone());
            }
            let mut env = world.env(cfg.master_seed, run_id)?;
            let mut agent =
                build_policy(PolicyKind::Random, res, world.dim(), cfg.master_seed, run_id, NoiseMode::Laplace)?;
            Ok(simulate(env.as_mut(), agent.as_mut(), cfg.horizon, false)?.cum_reward)
        })
        .collect()
}

pub fn run_replay_reward(cfg: &ExperimentConfig, world: &World) -> Result<(Outcome, Vec<Cell>)> {
    let res = Resolved::new(cfg, world);
    let cells = run_cells(cfg, world, &res, &cfg.policies, NoiseMode::Laplace)?;
    let norm = random_normalizer(cfg, world, &res, &cells)?;
    let ratio = |c: &Cell, t: usize| {
        let base = norm[c.run_id as usize][t - 1];
        (base > 0.0).then(|| c.trace.cum_reward[t - 1] / base)
    };
    let mut table = Table::new(&["run_id", "policy", "t", "cum_reward", "reward_ratio", "selected_arm"]);
    for c in &cells {
        for t in 1..=cfg.horizon {
            table.push(vec![
                c.run_id.to_string(),
                c.policy.name().into(),
                t.to_string(),
                c.trace.cum_reward[t - 1].to_string(),
                fmt_opt(ratio(c, t)),
                c.trace.selected[t - 1].to_string(),
            ]);
        }
    }
    let mut ratios = serde_json::Map::new();
    for &p in &cfg.policies {
        let xs: Vec<f64> = cells
            .iter()
            .filter(|c| c.policy == p)
            .filter_map(|c| ratio(c, cfg.horizon))
            .collect();
        ratios.insert(p.name().into(), json!(MeanStd::of(&xs)));
    }
    let summary = json!({
        "final_reward": final_summary(&cells, &cfg.policies, |t| *t.cum_reward.last().unwrap_or(&0.0)),
        "final_reward_ratio": ratios,
    });
    Ok((Outcome { kind: ExperimentKind::ReplayReward, table, summary, lambda0: world.lambda0 }, cells))
}

/// Final regret per `(ε, run, policy)`.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub run_id: u64,
    pub policy: PolicyKind,
    pub final_regret: f64,
}

pub fn run_eps_sweep(cfg: &ExperimentConfig, world: &World) -> Result<(Outcome, Vec<SweepPoint>)> {
    let mut policies: Vec<PolicyKind> = cfg.policies.iter().copied().filter(|p| p.is_private()).collect();
    if policies.is_empty() {
        policies.push(PolicyKind::PrivateLinUcbDgs);
    }
    let mut points = Vec::new();
    for &eps in &cfg.eps_grid {
        let mut c = cfg.clone();
        c.privacy.epsilon = eps;
        let res = Resolved::new(&c, world);
        let cells = run_cells(&c, world, &res, &policies, NoiseMode::Laplace)?;
        points.extend(cells.into_iter().map(|cell| SweepPoint {
            epsilon: eps,
            run_id: cell.run_id,
            policy: cell.policy,
            final_regret: cell.trace.final_regret(),
        }));
    }
    let mut table = Table::new(&["epsilon", "run_id", "policy", "final_regret"]);
    for p in &points {
        table.push(vec![
            p.epsilon.to_string(),
            p.run_id.to_string(),
            p.policy.name().into(),
            p.final_regret.to_string(),
        ]);
    }
    let mut summary = Vec::new();
    for &eps in &cfg.eps_grid {
        for &pol in &policies {
            let xs: Vec<f64> = points
                .iter()
                .filter(|p| p.epsilon == eps && p.policy == pol)
                .map(|p| p.final_regret)
                .collect();
            summary.push(json!({"epsilon": eps, "policy": pol.name(), "final_regret": MeanStd::of(&xs)}));
        }
    }
    Ok((
        Outcome { kind: ExperimentKind::EpsSweep, table, summary: json!(summary), lambda0: world.lambda0 },
        points,
    ))
}

/// Count of rounds whose selection differs between the paired runs.
#[derive(Debug, Clone)]
pub struct ArmChangePoint {
    pub policy: PolicyKind,
    pub change_point: usize,
    pub rep: u64,
    pub changed_arms: usize,
}

/// Runs `policy` twice on identical tapes, the second time with the reward
/// observed at round `change_point + 1` shifted by `delta`.
#[allow(clippy::too_many_arguments)]
pub fn paired_changes(
    cfg: &ExperimentConfig,
    world: &World,
    res: &Resolved,
    policy: PolicyKind,
    change_point: usize,
    delta: f64,
    rep: u64,
    noise: NoiseMode,
) -> Result<usize> {
    if change_point >= cfg.horizon {
        return Err(BenchError::Usage(format!(
            "change point {change_point} must be below T = {}",
            cfg.horizon
        )));
    }
    let d = world.dim();
    let mut env = world.taped_env(cfg.master_seed, 0, cfg.horizon)?;
    let mut agent = build_policy(policy, res, d, cfg.master_seed, rep, noise)?;
    let base = simulate(env.as_mut(), agent.as_mut(), cfg.horizon, cfg.clip_rewards)?;

    let round = change_point + 1;
    let mut env = world.taped_env(cfg.master_seed, 0, cfg.horizon)?;
    env.modify_reward(round, base.selected[round - 1], delta);
    let mut agent = build_policy(policy, res, d, cfg.master_seed, rep, noise)?;
    let moved = simulate(env.as_mut(), agent.as_mut(), cfg.horizon, cfg.clip_rewards)?;
    Ok(base.selected.iter().zip(&moved.selected).filter(|(a, b)| a != b).count())
}

pub fn run_arm_change(cfg: &ExperimentConfig, world: &World) -> Result<(Outcome, Vec<ArmChangePoint>)> {
    let res = Resolved::new(cfg, world);
    let mut jobs = Vec::new();
    for &policy in &cfg.policies {
        let reps = if policy.is_private() { cfg.arm_change_reps as u64 } else { 1 };
        for &cp in &cfg.change_points {
            for rep in 0..reps {
                jobs.push((policy, cp, rep));
            }
        }
    }
    let points = jobs
        .into_par_iter()
        .map(|(policy, change_point, rep)| {
            let changed_arms = paired_changes(
                cfg,
                world,
                &res,
                policy,
                change_point,
                cfg.change_delta,
                rep,
                NoiseMode::Laplace,
            )?;
            Ok(ArmChangePoint { policy, change_point, rep, changed_arms })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["policy", "change_point", "rep", "changed_arms"]);
    let mut groups: BTreeMap<(PolicyKind, usize), Vec<f64>> = BTreeMap::new();
    for p in &points {
        table.push(vec![
            p.policy.name().into(),
            p.change_point.to_string(),
            p.rep.to_string(),
            p.changed_arms.to_string(),
        ]);
        groups.entry((p.policy, p.change_point)).or_default().push(p.changed_arms as f64);
    }
    let summary: Vec<Value> = groups
        .iter()
        .map(|((pol, cp), xs)| json!({"policy": pol.name(), "change_point": cp, "changed_arms": MeanStd::of(xs)}))
        .collect();
    Ok((
        Outcome { kind: ExperimentKind::ArmChange, table, summary: json!(summary), lambda0: world.lambda0 },
        points,
    ))
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let world = World::build(cfg)?;
    Ok(match cfg.experiment {
        ExperimentKind::Regret => run_regret(cfg, &world)?.0,
        ExperimentKind::ParamError => run_param_error(cfg, &world)?.0,
        ExperimentKind::ReplayReward => run_replay_reward(cfg, &world)?.0,
        ExperimentKind::EpsSweep => run_eps_sweep(cfg, &world)?.0,
        ExperimentKind::ArmChange => run_arm_change(cfg, &world)?.0,
    })
}
