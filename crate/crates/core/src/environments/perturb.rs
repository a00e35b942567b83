use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::policies::Arm;
use crate::scalar::Scalar;

use super::{cap_norm, Environment};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbationConfig {
    /// Per-coordinate std of the Gaussian added to every context.
    pub sigma_ctx: f64,
    pub enabled: bool,
}

/// Adds fresh `N(0, σ²I)` noise to every pool feature, then re-caps norms
/// at L. Rewards and means still come from the unperturbed world.
pub struct Perturbed<E> {
    inner: E,
    sigma_ctx: f64,
    rng: ChaCha8Rng,
}

impl<E> Perturbed<E> {
    pub fn new(inner: E, config: PerturbationConfig, seed: u64) -> Result<Self> {
        if !(config.sigma_ctx >= 0.0) {
            return Err(Error::Config(format!("sigma_ctx must be >= 0, got {}", config.sigma_ctx)));
        }
        let sigma_ctx = if config.enabled { config.sigma_ctx } else { 0.0 };
        Ok(Self { inner, sigma_ctx, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<T: Scalar, E: Environment<T>> Environment<T> for Perturbed<E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn l_bound(&self) -> T {
        self.inner.l_bound()
    }

    fn pool(&mut self, t: usize) -> Result<Vec<Arm<T>>> {
        let mut pool = self.inner.pool(t)?;
        if self.sigma_ctx > 0.0 {
            let l = self.inner.l_bound();
            for arm in &mut pool {
                for v in arm.x.iter_mut() {
                    let z: f64 = self.rng.sample(StandardNormal);
                    *v = *v + T::of(self.sigma_ctx * z);
                }
                cap_norm(&mut arm.x, l);
            }
        }
        Ok(pool)
    }

    fn reward(&self, arm: &Arm<T>, t: usize) -> T {
        self.inner.reward(arm, t)
    }

    fn mean_reward(&self, arm: &Arm<T>) -> Option<T> {
        self.inner.mean_reward(arm)
    }

    fn theta_star(&self) -> Option<&[T]> {
        self.inner.theta_star()
    }

    fn modify_reward(&mut self, t: usize, arm_id: usize, delta: T) {
        self.inner.modify_reward(t, arm_id, delta)
    }
}
