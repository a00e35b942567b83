//! Arm-selection agents.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{alpha, ConfidenceParams, PrivateMode, RidgeState};
use crate::privacy::TreeMechanism;
use crate::scalar::{dot, l2_norm, Scalar};

/// A candidate with its context feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm<T> {
    pub id: usize,
    pub x: Vec<T>,
}

impl<T> Arm<T> {
    pub fn new(id: usize, x: Vec<T>) -> Self {
        Self { id, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    LinUcb,
    PrivateLinUcbConstant,
    PrivateLinUcbDgs,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::LinUcb,
        PolicyKind::PrivateLinUcbConstant,
        PolicyKind::PrivateLinUcbDgs,
        PolicyKind::Random,
    ];

    /// Serialized name used in configs and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::LinUcb => "linucb",
            PolicyKind::PrivateLinUcbConstant => "private-linucb",
            PolicyKind::PrivateLinUcbDgs => "private-linucb-dgs",
            PolicyKind::Random => "random",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, PolicyKind::PrivateLinUcbConstant | PolicyKind::PrivateLinUcbDgs)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}`")))
    }
}

pub trait Policy<T: Scalar>: Send {
    fn kind(&self) -> PolicyKind;

    /// Index into `pool` of the chosen arm at round `t ≥ 1`.
    fn select(&mut self, pool: &[Arm<T>], t: usize) -> Result<usize>;

    /// Feeds back the reward for the arm chosen at round `t`.
    fn observe(&mut self, x: &[T], r: T, t: usize) -> Result<()>;

    /// Parameter used for exploitation (θ̂ᵖ for private variants).
    fn theta(&self) -> Option<&[T]>;
}

/// `best_mean − chosen_mean`, clamped at zero.
pub fn pseudo_regret<T: Scalar>(best_mean: T, chosen_mean: T) -> T {
    (best_mean - chosen_mean).max(T::zero())
}

/// Lowest index maximizing `xᵀθ + α·‖x‖_{A⁻¹}`.
pub fn ucb_argmax<T: Scalar>(
    pool: &[Arm<T>],
    theta: &[T],
    alpha: T,
    ridge: &RidgeState<T>,
    l_bound: T,
) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::Input("empty arm pool".into()));
    }
    let cap = l_bound + T::of(1e-9);
    let mut best = (0, T::neg_infinity());
    for (i, arm) in pool.iter().enumerate() {
        if l2_norm(&arm.x) > cap {
            return Err(Error::Input(format!(
                "arm {} has feature norm {} above L = {l_bound}",
                arm.id,
                l2_norm(&arm.x)
            )));
        }
        let score = dot(&arm.x, theta) + alpha * ridge.confidence_width(&arm.x)?;
        if score > best.1 {
            best = (i, score);
        }
    }
    Ok(best.0)
}

/// Non-private LinUCB.
#[derive(Debug, Clone)]
pub struct LinUcb<T> {
    ridge: RidgeState<T>,
    conf: ConfidenceParams<T>,
}

impl<T: Scalar> LinUcb<T> {
    pub fn new(d: usize, lambda: T, conf: ConfidenceParams<T>) -> Result<Self> {
        let conf = ConfidenceParams { private_mode: PrivateMode::Off, ..conf };
        conf.validate()?;
        Ok(Self { ridge: RidgeState::new(d, lambda)?, conf })
    }

    pub fn ridge(&self) -> &RidgeState<T> {
        &self.ridge
    }
}

impl<T: Scalar> Policy<T> for LinUcb<T> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LinUcb
    }

    fn select(&mut self, pool: &[Arm<T>], t: usize) -> Result<usize> {
        let a = alpha(t.max(1), &self.conf, self.ridge.lambda(), self.ridge.dim())?;
        ucb_argmax(pool, self.ridge.theta_hat(), a, &self.ridge, self.conf.l_bound)
    }

    fn observe(&mut self, x: &[T], r: T, _t: usize) -> Result<()> {
        self.ridge.update(x, r)
    }

    fn theta(&self) -> Option<&[T]> {
        Some(self.ridge.theta_hat())
    }
}

/// Private LinUCB with tree noise added directly to θ̂ under the
/// time-decaying sensitivity schedule.
pub struct PrivateLinUcbDgs<T: Scalar> {
    ridge: RidgeState<T>,
    mech: TreeMechanism<T>,
    conf: ConfidenceParams<T>,
    theta_private: Vec<T>,
    last_noise: Vec<T>,
}

impl<T: Scalar> PrivateLinUcbDgs<T> {
    pub fn new(lambda: T, mech: TreeMechanism<T>, conf: ConfidenceParams<T>) -> Result<Self> {
        conf.validate()?;
        let d = mech.dim();
        Ok(Self {
            ridge: RidgeState::new(d, lambda)?,
            mech,
            conf,
            theta_private: vec![T::zero(); d],
            last_noise: vec![T::zero(); d],
        })
    }

    pub fn ridge(&self) -> &RidgeState<T> {
        &self.ridge
    }

    pub fn mechanism(&self) -> &TreeMechanism<T> {
        &self.mech
    }

    /// η from the most recent observation.
    pub fn last_noise(&self) -> &[T] {
        &self.last_noise
    }
}

impl<T: Scalar> Policy<T> for PrivateLinUcbDgs<T> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::PrivateLinUcbDgs
    }

    fn select(&mut self, pool: &[Arm<T>], t: usize) -> Result<usize> {
        let a = alpha(t.max(1), &self.conf, self.ridge.lambda(), self.ridge.dim())?;
        ucb_argmax(pool, &self.theta_private, a, &self.ridge, self.conf.l_bound)
    }

    fn observe(&mut self, x: &[T], r: T, t: usize) -> Result<()> {
        self.ridge.update(x, r)?;
        let eta = self.mech.tree_noise(t)?;
        self.theta_private = self
            .ridge
            .theta_hat()
            .iter()
            .zip(&eta)
            .map(|(&th, &e)| th + e)
            .collect();
        self.last_noise = eta;
        Ok(())
    }

    fn theta(&self) -> Option<&[T]> {
        Some(&self.theta_private)
    }
}

/// Baseline private LinUCB: tree noise with constant sensitivity added to
/// `b`, then θ̂ᵖ = A⁻¹ b̃.
pub struct PrivateLinUcbConstant<T: Scalar> {
    ridge: RidgeState<T>,
    mech: TreeMechanism<T>,
    conf: ConfidenceParams<T>,
    theta_private: Vec<T>,
}

impl<T: Scalar> PrivateLinUcbConstant<T> {
    pub fn new(lambda: T, mech: TreeMechanism<T>, conf: ConfidenceParams<T>) -> Result<Self> {
        conf.validate()?;
        let d = mech.dim();
        Ok(Self {
            ridge: RidgeState::new(d, lambda)?,
            mech,
            conf,
            theta_private: vec![T::zero(); d],
        })
    }

    pub fn mechanism(&self) -> &TreeMechanism<T> {
        &self.mech
    }
}

impl<T: Scalar> Policy<T> for PrivateLinUcbConstant<T> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::PrivateLinUcbConstant
    }

    fn select(&mut self, pool: &[Arm<T>], t: usize) -> Result<usize> {
        let a = alpha(t.max(1), &self.conf, self.ridge.lambda(), self.ridge.dim())?;
        ucb_argmax(pool, &self.theta_private, a, &self.ridge, self.conf.l_bound)
    }

    fn observe(&mut self, x: &[T], r: T, t: usize) -> Result<()> {
        self.ridge.update(x, r)?;
        let eta = self.mech.tree_noise(t)?;
        let b_noisy: Vec<T> = self.ridge.b().iter().zip(&eta).map(|(&b, &e)| b + e).collect();
        self.theta_private = self.ridge.mul_inv(&b_noisy);
        Ok(())
    }

    fn theta(&self) -> Option<&[T]> {
        Some(&self.theta_private)
    }
}

/// Uniform choice from its own stream.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<T: Scalar> Policy<T> for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn select(&mut self, pool: &[Arm<T>], _t: usize) -> Result<usize> {
        if pool.is_empty() {
            return Err(Error::Input("empty arm pool".into()));
        }
        Ok(self.rng.random_range(0..pool.len()))
    }

    fn observe(&mut self, _x: &[T], _r: T, _t: usize) -> Result<()> {
        Ok(())
    }

    fn theta(&self) -> Option<&[T]> {
        None
    }
}
