//! Building worlds and agents for one run, and stepping them.

use std::sync::Arc;

use dpbandit::environments::{
    second_moment, Environment, PerturbationConfig, Perturbed, ReplayData, ReplayEnv,
    ReplayEnvConfig, SyntheticEnv, SyntheticEnvConfig,
};
use dpbandit::privacy::{LaplaceNoise, NoiseSource, ZeroNoise};
use dpbandit::seed::child_seed;
use dpbandit::{
    l2_distance, ConfidenceParams, LinUcb, MechanismOptions, Policy, PolicyKind, PrivacyParams,
    PrivateLinUcbConstant, PrivateLinUcbDgs, PrivateMode, RandomPolicy, ScheduleMode,
    SensitivitySchedule, TreeMechanism,
};
use nalgebra::DMatrix;

use crate::config::{EnvConfig, ExperimentConfig};
use crate::error::{BenchError, Result};

/// Where private policies get their Laplace draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Laplace,
    /// Every draw is zero and the confidence radius drops its noise term,
    /// so private policies reduce to LinUCB.
    Zero,
}

/// Shared, immutable per-experiment state: the synthetic universe or the
/// loaded replay data, and the resolved λ₀.
#[derive(Clone)]
pub struct World {
    kind: WorldKind,
    pub lambda0: f64,
}

#[derive(Clone)]
enum WorldKind {
    Synthetic { base: Box<SyntheticEnv<f64>>, sigma: f64, l_bound: f64, pool_size: usize, sigma_ctx: f64 },
    Replay { data: Arc<ReplayData>, config: ReplayEnvConfig },
}

/// Samples that feed the λ₀ estimate.
const LAMBDA0_ROUNDS: usize = 2000;

impl World {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let kind = match &cfg.env {
            EnvConfig::Synthetic(s) => {
                let env_cfg = SyntheticEnvConfig {
                    k: s.k,
                    d: s.d,
                    pool_size: s.pool_size,
                    sigma: s.sigma,
                    l_bound: s.l_bound,
                    seed: cfg.master_seed,
                    theta_star: s.theta_star.clone(),
                };
                WorldKind::Synthetic {
                    base: Box::new(SyntheticEnv::generate(&env_cfg)?),
                    sigma: s.sigma,
                    l_bound: s.l_bound,
                    pool_size: s.pool_size,
                    sigma_ctx: s.sigma_ctx,
                }
            }
            EnvConfig::Replay(r) => {
                let data = ReplayData::load(&r.features_path, &r.interactions_path)?;
                let config = ReplayEnvConfig {
                    features_path: r.features_path.clone(),
                    interactions_path: r.interactions_path.clone(),
                    d: r.d,
                    pool_size: r.pool_size,
                    positives_per_pool: r.positives_per_pool,
                    seed: cfg.master_seed,
                    user_id: r.user_id,
                    l_bound: r.l_bound,
                };
                WorldKind::Replay { data: Arc::new(data), config }
            }
        };
        let mut world = World { kind, lambda0: 0.0 };
        world.lambda0 = match cfg.privacy.lambda0 {
            Some(v) => v,
            None => world.estimate_lambda0(cfg.master_seed)?,
        };
        Ok(world)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            WorldKind::Synthetic { base, .. } => base.dim(),
            WorldKind::Replay { data, .. } => data.dim(),
        }
    }

    pub fn theta_star(&self) -> Option<&[f64]> {
        match &self.kind {
            WorldKind::Synthetic { base, .. } => base.theta_star(),
            WorldKind::Replay { .. } => None,
        }
    }

    /// Fresh environment for `run_id`. Every policy in the same run gets an
    /// identical pool sequence and feedback tape.
    pub fn env(&self, master_seed: u64, run_id: u64) -> Result<Box<dyn Environment<f64>>> {
        let run_seed = child_seed(master_seed, run_id, "run");
        match &self.kind {
            WorldKind::Synthetic { base, sigma, l_bound, pool_size, sigma_ctx } => {
                let theta = base.theta_star().expect("synthetic worlds know θ*").to_vec();
                let env = SyntheticEnv::from_parts(
                    base.universe().to_vec(),
                    theta,
                    *pool_size,
                    *sigma,
                    *l_bound,
                    run_seed,
                )?;
                if *sigma_ctx > 0.0 {
                    let p = PerturbationConfig { sigma_ctx: *sigma_ctx, enabled: true };
                    let seed = child_seed(master_seed, run_id, "perturb");
                    Ok(Box::new(Perturbed::new(env, p, seed)?))
                } else {
                    Ok(Box::new(env))
                }
            }
            WorldKind::Replay { data, config } => {
                let cfg = ReplayEnvConfig { seed: run_seed, ..config.clone() };
                Ok(Box::new(ReplayEnv::<f64>::new(Arc::clone(data), &cfg)?))
            }
        }
    }

    /// Synthetic environment for `run_id` whose feedback noise is a fixed
    /// `T × K` tape drawn from `tape_seed`.
    pub fn taped_env(
        &self,
        master_seed: u64,
        run_id: u64,
        horizon: usize,
    ) -> Result<Box<dyn Environment<f64>>> {
        match &self.kind {
            WorldKind::Synthetic { base, sigma, l_bound, pool_size, .. } => {
                let run_seed = child_seed(master_seed, run_id, "run");
                let theta = base.theta_star().expect("synthetic worlds know θ*").to_vec();
                let env = SyntheticEnv::from_parts(
                    base.universe().to_vec(),
                    theta,
                    *pool_size,
                    *sigma,
                    *l_bound,
                    run_seed,
                )?;
                let tape = env.fixed_noise_tape(horizon, child_seed(master_seed, run_id, "tape"));
                Ok(Box::new(env.with_tape(tape)?))
            }
            WorldKind::Replay { .. } => self.env(master_seed, run_id),
        }
    }

    /// Minimum eigenvalue of the empirical second moment of pool features.
    pub fn estimate_lambda0(&self, master_seed: u64) -> Result<f64> {
        let samples: Vec<Vec<f64>> = match &self.kind {
            WorldKind::Synthetic { base, sigma, l_bound, pool_size, .. } => {
                let theta = base.theta_star().expect("synthetic worlds know θ*").to_vec();
                let mut env = SyntheticEnv::from_parts(
                    base.universe().to_vec(),
                    theta,
                    *pool_size,
                    *sigma,
                    *l_bound,
                    child_seed(master_seed, 0, "lambda0"),
                )?;
                let mut out = Vec::with_capacity(LAMBDA0_ROUNDS * pool_size);
                for t in 1..=LAMBDA0_ROUNDS {
                    out.extend(env.pool(t)?.into_iter().map(|a| a.x));
                }
                out
            }
            WorldKind::Replay { data, config } => data
                .features()
                .iter()
                .map(|x| {
                    let mut v = x.clone();
                    dpbandit::environments::cap_norm(&mut v, config.l_bound);
                    v
                })
                .collect(),
        };
        min_eigenvalue(&samples)
    }
}

/// Smallest eigenvalue of `(1/n) Σ x xᵀ`.
pub fn min_eigenvalue(samples: &[Vec<f64>]) -> Result<f64> {
    let d = samples.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(BenchError::Data("no feature samples to estimate lambda0 from".into()));
    }
    let m = DMatrix::from_row_slice(d, d, &second_moment(samples));
    Ok(m.symmetric_eigenvalues().min())
}

/// Privacy and confidence settings resolved against a world.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: usize,
    pub l_bound: f64,
    pub lambda0: f64,
    pub lambda: f64,
    pub schedule: ScheduleMode,
    pub options: MechanismOptions,
    pub zeta: f64,
    pub s_bound: f64,
    pub alpha_scale: f64,
}

impl Resolved {
    pub fn new(cfg: &ExperimentConfig, world: &World) -> Self {
        Self {
            epsilon: cfg.privacy.epsilon,
            delta: cfg.privacy.delta,
            horizon: cfg.horizon,
            l_bound: cfg.l_bound(),
            lambda0: world.lambda0,
            lambda: cfg.model.lambda,
            schedule: cfg.privacy.schedule,
            options: MechanismOptions {
                shape: cfg.privacy.noise_shape,
                strict: cfg.privacy.strict,
                store_tree: cfg.privacy.store_tree,
            },
            zeta: cfg.model.zeta,
            s_bound: cfg.model.s_bound,
            alpha_scale: cfg.model.alpha_scale,
        }
    }

    fn confidence(&self, mode: PrivateMode) -> ConfidenceParams<f64> {
        ConfidenceParams {
            zeta: self.zeta,
            s_bound: self.s_bound,
            l_bound: self.l_bound,
            epsilon: self.epsilon,
            horizon: self.horizon,
            private_mode: mode,
            alpha_scale: self.alpha_scale,
        }
    }

    fn mechanism(
        &self,
        mode: ScheduleMode,
        d: usize,
        source: Box<dyn NoiseSource<f64>>,
    ) -> Result<TreeMechanism<f64>> {
        let params = PrivacyParams::new(
            self.epsilon,
            self.delta,
            self.horizon,
            self.l_bound,
            self.lambda0,
            self.lambda,
        )?;
        Ok(TreeMechanism::new(SensitivitySchedule::new(params, mode), d, self.options, source)?)
    }
}

/// Seed of the noise stream for a private policy in a given repetition.
pub fn noise_seed(master_seed: u64, rep: u64, kind: PolicyKind) -> u64 {
    child_seed(master_seed, rep, &format!("noise/{}", kind.name()))
}

pub fn build_policy(
    kind: PolicyKind,
    res: &Resolved,
    d: usize,
    master_seed: u64,
    rep: u64,
    noise: NoiseMode,
) -> Result<Box<dyn Policy<f64>>> {
    let source = || -> Box<dyn NoiseSource<f64>> {
        match noise {
            NoiseMode::Laplace => Box::new(LaplaceNoise::from_seed(noise_seed(master_seed, rep, kind))),
            NoiseMode::Zero => Box::new(ZeroNoise),
        }
    };
    let private_mode = |m: PrivateMode| if noise == NoiseMode::Zero { PrivateMode::Off } else { m };
    Ok(match kind {
        PolicyKind::LinUcb => Box::new(LinUcb::new(d, res.lambda, res.confidence(PrivateMode::Off))?),
        PolicyKind::PrivateLinUcbDgs => {
            let dgs_mode = private_mode(if res.schedule == ScheduleMode::Constant {
                PrivateMode::Constant
            } else {
                PrivateMode::Dynamic
            });
            let mech = res.mechanism(res.schedule, d, source())?;
            Box::new(PrivateLinUcbDgs::new(res.lambda, mech, res.confidence(dgs_mode))?)
        }
        PolicyKind::PrivateLinUcbConstant => {
            let mech = res.mechanism(ScheduleMode::Constant, d, source())?;
            Box::new(PrivateLinUcbConstant::new(
                res.lambda,
                mech,
                res.confidence(private_mode(PrivateMode::Constant)),
            )?)
        }
        PolicyKind::Random => Box::new(RandomPolicy::from_seed(child_seed(master_seed, rep, "random"))),
    })
}

/// Per-round outcome of one policy in one environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    /// Arm id chosen at rounds `1..=T`.
    pub selected: Vec<usize>,
    /// Cumulative pseudo-regret; empty when the world has no ground truth.
    pub cum_regret: Vec<f64>,
    pub cum_reward: Vec<f64>,
    /// `‖θᵖ_t − θ*‖₂` for `t = 0..=T`; empty without θ* or θᵖ.
    pub param_error: Vec<f64>,
    /// Rounds whose reward was clipped before reaching the policy.
    pub clipped: usize,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_param_error(&self) -> f64 {
        self.param_error.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn simulate(
    env: &mut dyn Environment<f64>,
    policy: &mut dyn Policy<f64>,
    horizon: usize,
    clip: bool,
) -> Result<RunTrace> {
    let clip = clip && policy.kind().is_private();
    let theta_star = env.theta_star().map(<[f64]>::to_vec);
    let mut trace = RunTrace::default();
    let param_error = |p: &dyn Policy<f64>| match (p.theta(), &theta_star) {
        (Some(th), Some(star)) => Some(l2_distance(th, star)),
        _ => None,
    };
    trace.param_error.extend(param_error(policy));
    let (mut regret, mut reward) = (0.0, 0.0);
    for t in 1..=horizon {
        let pool = env.pool(t)?;
        let idx = policy.select(&pool, t)?;
        let arm = &pool[idx];
        let r = env.reward(arm, t);
        reward += r;
        trace.cum_reward.push(reward);
        trace.selected.push(arm.id);
        let means: Option<Vec<f64>> = pool.iter().map(|a| env.mean_reward(a)).collect();
        if let Some(means) = means {
            let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            regret += dpbandit::pseudo_regret(best, means[idx]);
            trace.cum_regret.push(regret);
        }
        let fed = if clip && r.abs() > 1.0 {
            trace.clipped += 1;
            r.clamp(-1.0, 1.0)
        } else {
            r
        };
        policy.observe(&arm.x, fed, t)?;
        if let Some(e) = param_error(policy) {
            if !e.is_finite() {
                return Err(BenchError::Numerical(format!(
                    "{} parameter became non-finite at round {t}",
                    policy.kind()
                )));
            }
            trace.param_error.push(e);
        }
    }
    Ok(trace)
}
