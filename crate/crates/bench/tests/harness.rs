use std::path::Path;

use dpbandit::environments::{Environment, ReplayData, SyntheticEnv};
use dpbandit::{PolicyKind, RandomPolicy};
use dpbandit_bench::config::{EnvConfig, ReplaySection, SyntheticSection};
use dpbandit_bench::experiments::{
    paired_changes, run, run_eps_sweep, run_param_error, run_regret, run_replay_reward,
};
use dpbandit_bench::fixture::{self, FixtureSpec};
use dpbandit_bench::output::write_outcome;
use dpbandit_bench::sim::{build_policy, simulate, NoiseMode, Resolved, World};
use dpbandit_bench::{BenchError, ExperimentConfig, ExperimentKind};

fn small(kind: ExperimentKind, policies: Vec<PolicyKind>, horizon: usize, runs: usize) -> ExperimentConfig {
    ExperimentConfig { experiment: kind, policies, horizon, runs, ..Default::default() }
}

#[test]
fn uniform_choice_between_two_arms_regrets_half() {
    let universe = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let mut env = SyntheticEnv::from_parts(universe, vec![1.0, 0.0], 2, 0.0, 1.0, 5).unwrap();
    let mut policy = RandomPolicy::from_seed(9);
    let horizon = 10_000;
    let trace = simulate(&mut env, &mut policy, horizon, false).unwrap();
    let per_round = trace.final_regret() / horizon as f64;
    assert!((0.47..=0.53).contains(&per_round), "{per_round}");
}

#[test]
fn linucb_beats_uniform_on_desk_profile() {
    let cfg = small(ExperimentKind::Regret, vec![PolicyKind::LinUcb, PolicyKind::Random], 5000, 10);
    let world = World::build(&cfg).unwrap();
    let (_, cells) = run_regret(&cfg, &world).unwrap();
    let mean = |p| {
        let xs: Vec<f64> =
            cells.iter().filter(|c| c.policy == p).map(|c| c.trace.final_regret()).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!(mean(PolicyKind::LinUcb) < mean(PolicyKind::Random));
}

#[test]
fn cumulative_regret_never_decreases() {
    let cfg = small(ExperimentKind::Regret, PolicyKind::ALL.to_vec(), 300, 2);
    let world = World::build(&cfg).unwrap();
    let (outcome, cells) = run_regret(&cfg, &world).unwrap();
    for c in &cells {
        assert!(c.trace.cum_regret.windows(2).all(|w| w[1] >= w[0]));
        assert!(c.trace.param_error.iter().all(|&e| e >= 0.0));
    }
    assert_eq!(outcome.table.rows.len(), 4 * 2 * 300);
}

#[test]
fn parameter_error_starts_at_theta_norm() {
    let cfg = small(ExperimentKind::ParamError, PolicyKind::ALL.to_vec(), 50, 1);
    let world = World::build(&cfg).unwrap();
    let norm = world.theta_star().unwrap().iter().map(|v| v * v).sum::<f64>().sqrt();
    let (outcome, _) = run_param_error(&cfg, &world).unwrap();
    let t = outcome.table.column("t").unwrap();
    let pe = outcome.table.column("param_error").unwrap();
    let policy = outcome.table.column("policy").unwrap();
    for row in outcome.table.rows.iter().filter(|r| r[t] == "0") {
        if row[policy] == "random" {
            assert_eq!(row[pe], "");
        } else {
            assert_eq!(row[pe].parse::<f64>().unwrap(), norm);
        }
    }
}

#[test]
fn zero_noise_error_traces_match_linucb() {
    let cfg = ExperimentConfig { horizon: 400, clip_rewards: false, ..Default::default() };
    let world = World::build(&cfg).unwrap();
    let res = Resolved::new(&cfg, &world);
    let trace = |p| {
        let mut env = world.env(cfg.master_seed, 0).unwrap();
        let mut agent = build_policy(p, &res, world.dim(), cfg.master_seed, 0, NoiseMode::Zero).unwrap();
        simulate(env.as_mut(), agent.as_mut(), cfg.horizon, false).unwrap()
    };
    let lin = trace(PolicyKind::LinUcb);
    assert_eq!(trace(PolicyKind::PrivateLinUcbDgs).param_error, lin.param_error);
    let constant = trace(PolicyKind::PrivateLinUcbConstant);
    assert_eq!(constant.selected, lin.selected);
    for (a, b) in constant.param_error.iter().zip(&lin.param_error) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn policies_in_one_run_see_the_same_pools() {
    let cfg = ExperimentConfig::default();
    let world = World::build(&cfg).unwrap();
    let mut a = world.env(cfg.master_seed, 3).unwrap();
    let mut b = world.env(cfg.master_seed, 3).unwrap();
    let mut other = world.env(cfg.master_seed, 4).unwrap();
    let mut differs = false;
    for t in 1..=50 {
        let (pa, pb, po) = (a.pool(t).unwrap(), b.pool(t).unwrap(), other.pool(t).unwrap());
        assert_eq!(pa, pb);
        for arm in &pa {
            assert_eq!(a.reward(arm, t), b.reward(arm, t));
        }
        differs |= pa != po;
    }
    assert!(differs);
}

#[test]
fn estimated_lambda0_is_positive_for_desk_world() {
    let cfg = ExperimentConfig::default();
    let world = World::build(&cfg).unwrap();
    assert!(world.lambda0 > 0.01 && world.lambda0 < 0.1, "{}", world.lambda0);
}

#[test]
fn sweep_has_one_row_per_epsilon_and_run() {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::EpsSweep,
        eps_grid: vec![0.5, 5.0, 50.0],
        runs: 3,
        horizon: 200,
        policies: vec![PolicyKind::PrivateLinUcbDgs],
        ..Default::default()
    };
    let world = World::build(&cfg).unwrap();
    let (outcome, points) = run_eps_sweep(&cfg, &world).unwrap();
    assert_eq!(outcome.table.rows.len(), 9);
    assert_eq!(points.len(), 9);
}

#[test]
fn late_change_point_cannot_move_any_selection() {
    let cfg = ExperimentConfig { horizon: 200, ..Default::default() };
    let world = World::build(&cfg).unwrap();
    let res = Resolved::new(&cfg, &world);
    for p in PolicyKind::ALL {
        let n = paired_changes(&cfg, &world, &res, p, 199, 0.5, 0, NoiseMode::Laplace).unwrap();
        assert_eq!(n, 0, "{p}");
    }
    let err = paired_changes(&cfg, &world, &res, PolicyKind::LinUcb, 200, 0.5, 0, NoiseMode::Laplace);
    assert!(matches!(err, Err(BenchError::Usage(_))));
}

#[test]
fn linucb_changes_shrink_with_later_change_points() {
    let cfg = ExperimentConfig { horizon: 500, ..Default::default() };
    let world = World::build(&cfg).unwrap();
    let res = Resolved::new(&cfg, &world);
    let count = |cp| paired_changes(&cfg, &world, &res, PolicyKind::LinUcb, cp, 0.5, 0, NoiseMode::Laplace).unwrap();
    assert!(count(200) <= count(0));
}

fn replay_config(dir: &Path, horizon: usize) -> ExperimentConfig {
    let (features, interactions) = fixture::generate(dir, 1, &FixtureSpec::default()).unwrap();
    ExperimentConfig {
        experiment: ExperimentKind::ReplayReward,
        env: EnvConfig::Replay(ReplaySection {
            features_path: features,
            interactions_path: interactions,
            ..Default::default()
        }),
        policies: vec![PolicyKind::LinUcb, PolicyKind::Random],
        horizon,
        runs: 2,
        ..Default::default()
    }
}

#[test]
fn uniform_policy_normalizes_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = replay_config(dir.path(), 5000);
    let world = World::build(&cfg).unwrap();
    let (outcome, _) = run_replay_reward(&cfg, &world).unwrap();
    let r = outcome.summary["final_reward_ratio"]["random"]["mean"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&r), "{r}");
    let lin = outcome.summary["final_reward_ratio"]["linucb"]["mean"].as_f64().unwrap();
    assert!(lin > 1.0, "{lin}");
}

#[test]
fn always_picking_the_positive_scores_pool_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = replay_config(dir.path(), 5000);
    let world = World::build(&cfg).unwrap();
    let res = Resolved::new(&cfg, &world);
    let pool_size = 25.0;
    // uniform hits are Binomial(T, 1/25); allow three standard deviations
    let p = 1.0 / pool_size;
    let rel = 3.0 * ((1.0 - p) / (cfg.horizon as f64 * p)).sqrt();
    let (lo, hi) = (pool_size / (1.0 + rel), pool_size / (1.0 - rel));
    for run_id in 0..cfg.runs as u64 {
        let mut env = world.env(cfg.master_seed, run_id).unwrap();
        let mut oracle = 0.0;
        for t in 1..=cfg.horizon {
            let pool = env.pool(t).unwrap();
            assert_eq!(pool.len(), 25);
            let hits: Vec<_> = pool.iter().filter(|a| env.reward(a, t) == 1.0).collect();
            assert_eq!(hits.len(), 1);
            oracle += 1.0;
        }
        let mut env = world.env(cfg.master_seed, run_id).unwrap();
        let mut uniform =
            build_policy(PolicyKind::Random, &res, world.dim(), cfg.master_seed, run_id, NoiseMode::Laplace)
                .unwrap();
        let base = *simulate(env.as_mut(), uniform.as_mut(), cfg.horizon, false)
            .unwrap()
            .cum_reward
            .last()
            .unwrap();
        let ratio = oracle / base;
        assert!((lo..=hi).contains(&ratio), "{ratio} outside [{lo}, {hi}]");
    }
}

#[test]
fn header_only_replay_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("features.csv");
    let i = dir.path().join("interactions.csv");
    std::fs::write(&f, "id,f1,f2\n").unwrap();
    std::fs::write(&i, "user_id,item_id\n").unwrap();
    let err = ReplayData::load(&f, &i).unwrap_err();
    assert!(matches!(err, dpbandit::Error::Data(_)));

    let cfg = ExperimentConfig {
        experiment: ExperimentKind::ReplayReward,
        env: EnvConfig::Replay(ReplaySection {
            features_path: dir.path().join("missing.csv"),
            interactions_path: i,
            ..Default::default()
        }),
        ..Default::default()
    };
    match run(&cfg) {
        Err(BenchError::Data(msg)) => assert!(msg.contains("missing.csv"), "{msg}"),
        other => panic!("expected a data error, got {other:?}"),
    }
}

#[test]
fn sidecar_config_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        horizon: 120,
        runs: 2,
        output_dir: dir.path().join("a"),
        ..Default::default()
    };
    let outcome = run(&cfg).unwrap();
    let files = write_outcome(&cfg, &outcome).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&files.metadata).unwrap()).unwrap();
    assert_eq!(meta["library_version"], dpbandit::VERSION);
    assert_eq!(meta["seeds"]["master_seed"], cfg.master_seed);
    let mut again: ExperimentConfig = toml::from_str(meta["config_toml"].as_str().unwrap()).unwrap();
    again.output_dir = dir.path().join("b");
    let files_b = write_outcome(&again, &run(&again).unwrap()).unwrap();
    assert_eq!(std::fs::read(&files.csv).unwrap(), std::fs::read(&files_b.csv).unwrap());
    let summary = std::fs::read_to_string(&files.summary).unwrap();
    assert!(summary.contains("final_regret"));
}

#[test]
fn perturbed_contexts_still_run() {
    let cfg = ExperimentConfig {
        env: EnvConfig::Synthetic(SyntheticSection { sigma_ctx: 0.2, ..Default::default() }),
        horizon: 200,
        runs: 1,
        ..Default::default()
    };
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.table.rows.len(), 4 * 200);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
