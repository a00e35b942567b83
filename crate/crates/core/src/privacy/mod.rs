//! Sensitivity schedules, Laplace sampling and the tree-based noise mechanism.

mod noise;
mod schedule;
mod tree;

pub use noise::{
    laplace, laplace_cdf, laplace_density, vector_noise, LaplaceNoise, NoiseShape, NoiseSource,
    RecordingNoise, ScaleLog, ZeroNoise,
};
pub use schedule::{lambda_prime, ScheduleMode, SensitivitySchedule};
pub use tree::{utility_bound, MechanismOptions, TreeMechanism};

use crate::error::{Error, Result};
use crate::model::log2_levels;
use crate::scalar::Scalar;

/// Privacy budget and the constants the sensitivity bound depends on.
///
/// The per-level budget `ε' = ε/⌈log₂T⌉`, `δ' = δ/⌈log₂T⌉` is computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyParams<T> {
    epsilon: T,
    delta: T,
    horizon: usize,
    l_bound: T,
    lambda0: T,
    lambda: T,
    levels: usize,
    epsilon_level: T,
    delta_level: T,
}

impl<T: Scalar> PrivacyParams<T> {
    pub fn new(
        epsilon: T,
        delta: T,
        horizon: usize,
        l_bound: T,
        lambda0: T,
        lambda: T,
    ) -> Result<Self> {
        let zero = T::zero();
        if !(epsilon > zero) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > zero && delta < T::one()) {
            return Err(Error::Config(format!("delta must lie in (0,1), got {delta}")));
        }
        if horizon < 2 {
            return Err(Error::Config(format!("horizon must be at least 2, got {horizon}")));
        }
        if !(l_bound > zero) {
            return Err(Error::Config(format!("L must be positive, got {l_bound}")));
        }
        if !(lambda0 > zero) {
            return Err(Error::Config(format!("lambda0 must be positive, got {lambda0}")));
        }
        if !(lambda > zero) {
            return Err(Error::Config(format!("ridge lambda must be positive, got {lambda}")));
        }
        let levels = log2_levels(horizon);
        let k = T::count(levels);
        Ok(Self {
            epsilon,
            delta,
            horizon,
            l_bound,
            lambda0,
            lambda,
            levels,
            epsilon_level: epsilon / k,
            delta_level: delta / k,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn l_bound(&self) -> T {
        self.l_bound
    }

    pub fn lambda0(&self) -> T {
        self.lambda0
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `⌈log₂T⌉`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Tree depth, `⌈log₂T⌉ + 1` bits.
    pub fn depth(&self) -> usize {
        self.levels + 1
    }

    /// ε'
    pub fn epsilon_level(&self) -> T {
        self.epsilon_level
    }

    /// δ'
    pub fn delta_level(&self) -> T {
        self.delta_level
    }
}
