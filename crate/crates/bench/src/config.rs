use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dpbandit::{NoiseShape, PolicyKind, ScheduleMode};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Regret,
    ReplayReward,
    ParamError,
    EpsSweep,
    ArmChange,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Regret => "regret",
            ExperimentKind::ReplayReward => "replay_reward",
            ExperimentKind::ParamError => "param_error",
            ExperimentKind::EpsSweep => "eps_sweep",
            ExperimentKind::ArmChange => "arm_change",
        }
    }
}

/// Everything one invocation needs. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub env: EnvConfig,
    #[serde(with = "named_list")]
    pub policies: Vec<PolicyKind>,
    pub privacy: PrivacyConfig,
    pub model: ModelConfig,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub eps_grid: Vec<f64>,
    pub change_points: Vec<usize>,
    pub change_delta: f64,
    /// Repetitions per private policy in the arm-change experiment.
    pub arm_change_reps: usize,
    /// Clip rewards fed to private policies into [-1, 1].
    pub clip_rewards: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Regret,
            env: EnvConfig::Synthetic(SyntheticSection::default()),
            policies: vec![
                PolicyKind::LinUcb,
                PolicyKind::PrivateLinUcbDgs,
                PolicyKind::PrivateLinUcbConstant,
                PolicyKind::Random,
            ],
            privacy: PrivacyConfig::default(),
            model: ModelConfig::default(),
            horizon: 5000,
            runs: 10,
            master_seed: 20_200_707,
            eps_grid: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
            change_points: vec![0, 100, 200],
            change_delta: 0.5,
            arm_change_reps: 5,
            clip_rewards: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    Synthetic(SyntheticSection),
    Replay(ReplaySection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub pool_size: usize,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub l_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    /// Std of the Gaussian context perturbation; 0 disables it.
    pub sigma_ctx: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self { k: 100, d: 10, pool_size: 10, sigma: 0.5, l_bound: 1.0, theta_star: None, sigma_ctx: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplaySection {
    pub features_path: PathBuf,
    pub interactions_path: PathBuf,
    pub d: usize,
    pub pool_size: usize,
    pub positives_per_pool: usize,
    pub user_id: usize,
    #[serde(rename = "L")]
    pub l_bound: f64,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            features_path: PathBuf::from("data/features.csv"),
            interactions_path: PathBuf::from("data/interactions.csv"),
            d: 25,
            pool_size: 25,
            positives_per_pool: 1,
            user_id: 0,
            l_bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacyConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Lower bound on the context second-moment eigenvalue. Estimated from
    /// the environment when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(with = "named")]
    pub schedule: ScheduleMode,
    #[serde(with = "named")]
    pub noise_shape: NoiseShape,
    pub strict: bool,
    pub store_tree: bool,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            epsilon: 2.0,
            delta: 0.1,
            lambda0: None,
            schedule: ScheduleMode::Exact,
            noise_shape: NoiseShape::PerCoordinate,
            strict: false,
            store_tree: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Ridge regularizer λ.
    pub lambda: f64,
    pub alpha_scale: f64,
    pub zeta: f64,
    #[serde(rename = "S")]
    pub s_bound: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { lambda: 300.0, alpha_scale: 0.3, zeta: 0.1, s_bound: 1.0 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BenchError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| BenchError::Usage(format!("invalid config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Usage(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.horizon < 2 {
            return bad(format!("T must be at least 2, got {}", self.horizon));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0)) {
            return bad(format!("eps_grid entries must be positive, got {e}"));
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        let changes = self.experiment == ExperimentKind::ArmChange;
        if let Some(c) = self.change_points.iter().find(|&&c| changes && c >= self.horizon) {
            return bad(format!("change point {c} must be below T = {}", self.horizon));
        }
        if self.arm_change_reps == 0 {
            return bad("arm_change_reps must be at least 1".into());
        }
        if !(self.model.lambda > 0.0) || !(self.model.alpha_scale > 0.0) {
            return bad("model.lambda and model.alpha_scale must be positive".into());
        }
        if let Some(l0) = self.privacy.lambda0 {
            if !(l0 > 0.0) {
                return bad(format!("privacy.lambda0 must be positive, got {l0}"));
            }
        }
        let needs_synthetic = matches!(
            self.experiment,
            ExperimentKind::Regret | ExperimentKind::ParamError | ExperimentKind::EpsSweep
        );
        match (&self.env, needs_synthetic, self.experiment) {
            (EnvConfig::Replay(_), true, kind) => {
                bad(format!("experiment {} needs a synthetic env", kind.name()))
            }
            (EnvConfig::Synthetic(_), _, ExperimentKind::ReplayReward) => {
                bad("experiment replay_reward needs a replay env".into())
            }
            (EnvConfig::Synthetic(s), _, _) if !(s.sigma_ctx >= 0.0) => {
                bad(format!("sigma_ctx must be >= 0, got {}", s.sigma_ctx))
            }
            _ => Ok(()),
        }
    }

    pub fn l_bound(&self) -> f64 {
        match &self.env {
            EnvConfig::Synthetic(s) => s.l_bound,
            EnvConfig::Replay(r) => r.l_bound,
        }
    }
}

/// Serde through `Display`/`FromStr`.
mod named {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

mod named_list {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<Vec<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(de::Error::custom))
            .collect()
    }
}
