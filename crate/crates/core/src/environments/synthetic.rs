use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policies::Arm;
use crate::scalar::{dot, Scalar};
use crate::seed::{child_seed, splitmix64, unit_open};

use super::{cap_norm, Environment};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEnvConfig {
    /// Universe size K.
    pub k: usize,
    pub d: usize,
    pub pool_size: usize,
    /// Std of the Gaussian feedback noise.
    pub sigma: f64,
    pub l_bound: f64,
    pub seed: u64,
    pub theta_star: Option<Vec<f64>>,
}

impl Default for SyntheticEnvConfig {
    fn default() -> Self {
        Self {
            k: 1000,
            d: 10,
            pool_size: 10,
            sigma: 0.5,
            l_bound: 1.0,
            seed: 0,
            theta_star: None,
        }
    }
}

impl SyntheticEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::Config("K and d must be positive".into()));
        }
        if self.pool_size == 0 || self.pool_size > self.k {
            return Err(Error::Config(format!(
                "pool_size must lie in [1, K={}], got {}",
                self.k, self.pool_size
            )));
        }
        if !(self.sigma >= 0.0) || !(self.l_bound > 0.0) {
            return Err(Error::Config("sigma must be >= 0 and L > 0".into()));
        }
        if let Some(th) = &self.theta_star {
            if th.len() != self.d {
                return Err(Error::Config(format!(
                    "theta_star has length {}, expected d={}",
                    th.len(),
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// Feedback noise fixed ahead of time for every `(round, arm)` cell.
///
/// Entries are computed on demand from a counter-based hash of
/// `(seed, round, arm)` through Box–Muller, so the table behaves like a
/// pre-drawn `T × K` array without being stored. Overrides shift single
/// cells to build neighbouring reward sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTape {
    seed: u64,
    sigma: f64,
    arms: usize,
    horizon: usize,
    overrides: BTreeMap<(usize, usize), f64>,
}

impl NoiseTape {
    pub fn new(seed: u64, sigma: f64, arms: usize, horizon: usize) -> Self {
        Self { seed, sigma, arms, horizon, overrides: BTreeMap::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Noise at `(t, arm)` including any override.
    pub fn entry(&self, t: usize, arm: usize) -> f64 {
        self.base(t, arm) + self.overrides.get(&(t, arm)).copied().unwrap_or(0.0)
    }

    fn base(&self, t: usize, arm: usize) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let key = child_seed(self.seed, t as u64, "tape") ^ splitmix64(arm as u64);
        let h1 = splitmix64(key);
        let h2 = splitmix64(h1);
        let (u1, u2) = (unit_open(h1), unit_open(h2));
        self.sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Adds `delta` to cell `(t, arm)`.
    pub fn shift(&mut self, t: usize, arm: usize, delta: f64) {
        *self.overrides.entry((t, arm)).or_insert(0.0) += delta;
    }

    pub fn with_shift(mut self, t: usize, arm: usize, delta: f64) -> Self {
        self.shift(t, arm, delta);
        self
    }

    /// Dense `T × K` view, rows for rounds `1..=T`.
    pub fn materialize(&self) -> Vec<Vec<f64>> {
        (1..=self.horizon)
            .map(|t| (0..self.arms).map(|a| self.entry(t, a)).collect())
            .collect()
    }
}

/// Linear world: uniform features on the L-ball, `r = xᵀθ* + γ`.
#[derive(Debug, Clone)]
pub struct SyntheticEnv<T> {
    universe: Vec<Vec<T>>,
    theta_star: Vec<T>,
    pool_size: usize,
    l_bound: T,
    pool_rng: ChaCha8Rng,
    tape: NoiseTape,
}

impl<T: Scalar> SyntheticEnv<T> {
    /// Draws the universe and θ* from `config.seed`.
    pub fn generate(config: &SyntheticEnvConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(config.seed, 0, "universe"));
        let l = T::of(config.l_bound);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut x: Vec<T> = (0..config.d).map(|_| T::of(rng.random::<f64>())).collect();
            cap_norm(&mut x, l);
            x
        };
        let universe: Vec<Vec<T>> = (0..config.k).map(|_| draw(&mut rng)).collect();
        let theta_star = match &config.theta_star {
            Some(th) => th.iter().map(|&v| T::of(v)).collect(),
            None => {
                let mut theta_rng =
                    ChaCha8Rng::seed_from_u64(child_seed(config.seed, 0, "theta"));
                draw(&mut theta_rng)
            }
        };
        Self::from_parts(universe, theta_star, config.pool_size, config.sigma, config.l_bound, config.seed)
    }

    /// World over an explicit universe.
    pub fn from_parts(
        universe: Vec<Vec<T>>,
        theta_star: Vec<T>,
        pool_size: usize,
        sigma: f64,
        l_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        let d = theta_star.len();
        if universe.is_empty() || d == 0 || universe.iter().any(|x| x.len() != d) {
            return Err(Error::Config("universe must be non-empty with rows of length d".into()));
        }
        if pool_size == 0 || pool_size > universe.len() {
            return Err(Error::Config(format!(
                "pool_size must lie in [1, {}], got {pool_size}",
                universe.len()
            )));
        }
        let k = universe.len();
        Ok(Self {
            universe,
            theta_star,
            pool_size,
            l_bound: T::of(l_bound),
            pool_rng: ChaCha8Rng::seed_from_u64(child_seed(seed, 0, "pool")),
            tape: NoiseTape::new(child_seed(seed, 0, "feedback"), sigma, k, usize::MAX),
        })
    }

    pub fn universe(&self) -> &[Vec<T>] {
        &self.universe
    }

    pub fn tape(&self) -> &NoiseTape {
        &self.tape
    }

    /// Fresh `T × K` feedback tape for this universe.
    pub fn fixed_noise_tape(&self, horizon: usize, seed: u64) -> NoiseTape {
        NoiseTape::new(seed, self.tape.sigma, self.universe.len(), horizon)
    }

    pub fn set_tape(&mut self, tape: NoiseTape) -> Result<()> {
        if tape.arms != self.universe.len() {
            return Err(Error::Config(format!(
                "tape covers {} arms, universe has {}",
                tape.arms,
                self.universe.len()
            )));
        }
        self.tape = tape;
        Ok(())
    }

    pub fn with_tape(mut self, tape: NoiseTape) -> Result<Self> {
        self.set_tape(tape)?;
        Ok(self)
    }

    fn mean_of(&self, id: usize) -> T {
        dot(&self.universe[id], &self.theta_star)
    }
}

impl<T: Scalar> Environment<T> for SyntheticEnv<T> {
    fn dim(&self) -> usize {
        self.theta_star.len()
    }

    fn l_bound(&self) -> T {
        self.l_bound
    }

    fn pool(&mut self, t: usize) -> Result<Vec<Arm<T>>> {
        if t == 0 {
            return Err(Error::Input("rounds start at 1".into()));
        }
        let ids = rand::seq::index::sample(&mut self.pool_rng, self.universe.len(), self.pool_size);
        Ok(ids
            .into_iter()
            .map(|id| Arm::new(id, self.universe[id].clone()))
            .collect())
    }

    fn reward(&self, arm: &Arm<T>, t: usize) -> T {
        self.mean_of(arm.id) + T::of(self.tape.entry(t, arm.id))
    }

    fn mean_reward(&self, arm: &Arm<T>) -> Option<T> {
        Some(self.mean_of(arm.id))
    }

    fn theta_star(&self) -> Option<&[T]> {
        Some(&self.theta_star)
    }

    fn modify_reward(&mut self, t: usize, arm_id: usize, delta: T) {
        self.tape.shift(t, arm_id, delta.as_f64());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::l2_norm;

    fn desk(seed: u64) -> SyntheticEnvConfig {
        SyntheticEnvConfig { seed, ..Default::default() }
    }

    #[test]
    fn features_within_norm_bound() {
        let env = SyntheticEnv::<f64>::generate(&desk(3)).unwrap();
        assert_eq!(env.universe().len(), 1000);
        assert!(env.universe().iter().all(|x| l2_norm(x) <= 1.0 + 1e-12));
        assert!(l2_norm(env.theta_star().unwrap()) <= 1.0 + 1e-12);
    }

    #[test]
    fn same_seed_same_universe() {
        let a = SyntheticEnv::<f64>::generate(&desk(3)).unwrap();
        let b = SyntheticEnv::<f64>::generate(&desk(3)).unwrap();
        let c = SyntheticEnv::<f64>::generate(&desk(4)).unwrap();
        assert_eq!(a.universe(), b.universe());
        assert_eq!(a.theta_star(), b.theta_star());
        assert_ne!(a.universe(), c.universe());
    }

    #[test]
    fn explicit_theta_is_kept() {
        let cfg = SyntheticEnvConfig { d: 2, k: 5, pool_size: 2, theta_star: Some(vec![0.1, 0.2]), ..desk(1) };
        let env = SyntheticEnv::<f64>::generate(&cfg).unwrap();
        assert_eq!(env.theta_star().unwrap(), &[0.1, 0.2]);
        let bad = SyntheticEnvConfig { theta_star: Some(vec![1.0]), ..cfg };
        assert!(SyntheticEnv::<f64>::generate(&bad).is_err());
    }

    #[test]
    fn pools_are_distinct_and_reproducible() {
        let cfg = SyntheticEnvConfig { k: 1000, pool_size: 10, ..desk(9) };
        let mut a = SyntheticEnv::<f64>::generate(&cfg).unwrap();
        let mut b = SyntheticEnv::<f64>::generate(&cfg).unwrap();
        for t in 1..=50 {
            let pa = a.pool(t).unwrap();
            let mut ids: Vec<usize> = pa.iter().map(|x| x.id).collect();
            assert_eq!(pa, b.pool(t).unwrap());
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), 10);
        }
    }

    #[test]
    fn noiseless_reward_is_dot_product() {
        let env = SyntheticEnv::from_parts(
            vec![vec![0.5, 0.3]],
            vec![1.0, 0.0],
            1,
            0.0,
            1.0,
            0,
        )
        .unwrap();
        assert_eq!(env.reward(&Arm::new(0, vec![0.5, 0.3]), 1), 0.5);
    }

    #[test]
    fn feedback_noise_std() {
        let env = SyntheticEnv::from_parts(vec![vec![0.0]], vec![1.0], 1, 0.5, 1.0, 21).unwrap();
        let arm = Arm::new(0, vec![0.0]);
        let xs: Vec<f64> = (1..=100_000).map(|t| env.reward(&arm, t)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!((0.49..=0.51).contains(&sd), "{sd}");
        assert!(m.abs() < 0.01);
    }

    #[test]
    fn tape_determinism_and_single_cell_shift() {
        let env = SyntheticEnv::<f64>::generate(&SyntheticEnvConfig { k: 20, ..desk(2) }).unwrap();
        let a = env.fixed_noise_tape(30, 77);
        let b = env.fixed_noise_tape(30, 77);
        assert_eq!(a.materialize(), b.materialize());
        let shifted = b.with_shift(12, 4, 0.5).materialize();
        let base = a.materialize();
        let mut diffs = 0;
        for (t, (r0, r1)) in base.iter().zip(&shifted).enumerate() {
            for (arm, (x0, x1)) in r0.iter().zip(r1).enumerate() {
                if x0 != x1 {
                    diffs += 1;
                    assert_eq!((t + 1, arm), (12, 4));
                    assert!((x1 - x0 - 0.5).abs() < 1e-12);
                }
            }
        }
        assert_eq!(diffs, 1);
    }
}
