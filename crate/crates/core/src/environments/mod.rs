//! Worlds that hand out candidate pools and rewards.

mod perturb;
mod replay;
mod synthetic;

pub use perturb::{PerturbationConfig, Perturbed};
pub use replay::{ReplayData, ReplayEnv, ReplayEnvConfig};
pub use synthetic::{NoiseTape, SyntheticEnv, SyntheticEnvConfig};

use crate::error::Result;
use crate::policies::Arm;
use crate::scalar::{l2_norm, Scalar};

pub trait Environment<T: Scalar>: Send {
    fn dim(&self) -> usize;

    /// Norm bound L every emitted feature satisfies.
    fn l_bound(&self) -> T;

    /// Candidate pool for round `t ≥ 1`. Call once per round, in order.
    fn pool(&mut self, t: usize) -> Result<Vec<Arm<T>>>;

    /// Realized reward for `arm` at round `t`.
    fn reward(&self, arm: &Arm<T>, t: usize) -> T;

    /// Ground-truth mean reward, when the world knows it.
    fn mean_reward(&self, arm: &Arm<T>) -> Option<T>;

    fn theta_star(&self) -> Option<&[T]>;

    /// Builds the neighbouring sequence: change the reward of `arm_id` at
    /// round `t` only (additive shift for synthetic worlds, label flip for
    /// replay).
    fn modify_reward(&mut self, t: usize, arm_id: usize, delta: T);
}

impl<T: Scalar, E: Environment<T> + ?Sized> Environment<T> for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn l_bound(&self) -> T {
        (**self).l_bound()
    }
    fn pool(&mut self, t: usize) -> Result<Vec<Arm<T>>> {
        (**self).pool(t)
    }
    fn reward(&self, arm: &Arm<T>, t: usize) -> T {
        (**self).reward(arm, t)
    }
    fn mean_reward(&self, arm: &Arm<T>) -> Option<T> {
        (**self).mean_reward(arm)
    }
    fn theta_star(&self) -> Option<&[T]> {
        (**self).theta_star()
    }
    fn modify_reward(&mut self, t: usize, arm_id: usize, delta: T) {
        (**self).modify_reward(t, arm_id, delta)
    }
}

/// Rescales `x` onto the L-ball only if it lies outside: `x / max(1, ‖x‖/L)`.
pub fn cap_norm<T: Scalar>(x: &mut [T], l_bound: T) {
    let factor = (l2_norm(x) / l_bound).max(T::one());
    if factor > T::one() {
        for v in x.iter_mut() {
            *v = *v / factor;
        }
    }
}

/// `(1/n) Σ x xᵀ`, dense row-major.
pub fn second_moment<T: Scalar>(samples: &[Vec<T>]) -> Vec<T> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let d = first.len();
    let mut m = vec![T::zero(); d * d];
    for x in samples {
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = m[i * d + j] + x[i] * x[j];
            }
        }
    }
    let n = T::count(samples.len());
    m.iter_mut().for_each(|v| *v = *v / n);
    m
}
