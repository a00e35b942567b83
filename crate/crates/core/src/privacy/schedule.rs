use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::PrivacyParams;

/// High-probability lower bound on `λ_min(Σ x xᵀ)` after `t` i.i.d. contexts,
/// `λ₀t/4 − 8·log((t+3)/δ') − 2·√(t·log((t+3)/δ'))`.
///
/// Negative for small `t`; callers floor it.
pub fn lambda_prime<T: Scalar>(t: usize, params: &PrivacyParams<T>) -> T {
    let tt = T::count(t);
    let g = ((tt + T::of(3.0)) / params.delta_level()).ln();
    params.lambda0() * tt / T::of(4.0) - T::of(8.0) * g - T::of(2.0) * (tt * g).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// `2L / max(λ, λ'(t))`.
    Exact,
    /// `2L/λ` up to `32·log(1/δ')/λ₀`, then `min(2L/λ, 32L/(λ₀t))`.
    Simplified,
    /// `L`, the sensitivity of `b_t = Σ x r`.
    Constant,
}

impl ScheduleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleMode::Exact => "exact",
            ScheduleMode::Simplified => "simplified",
            ScheduleMode::Constant => "constant",
        }
    }
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ScheduleMode::Exact, ScheduleMode::Simplified, ScheduleMode::Constant]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown schedule `{s}`")))
    }
}

/// Map `t ↦ Δ_t`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySchedule<T> {
    params: PrivacyParams<T>,
    mode: ScheduleMode,
}

impl<T: Scalar> SensitivitySchedule<T> {
    pub fn new(params: PrivacyParams<T>, mode: ScheduleMode) -> Self {
        Self { params, mode }
    }

    pub fn params(&self) -> &PrivacyParams<T> {
        &self.params
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    /// Round after which the simplified `λ₀t/16` eigenvalue bound applies.
    pub fn simplified_threshold(&self) -> T {
        T::of(32.0) * (T::one() / self.params.delta_level()).ln() / self.params.lambda0()
    }

    /// Δ_t for `t ≥ 1`.
    pub fn sensitivity(&self, t: usize) -> Result<T> {
        if t == 0 {
            return Err(Error::Input("sensitivity is defined for rounds t >= 1".into()));
        }
        let p = &self.params;
        let two_l = T::of(2.0) * p.l_bound();
        let ridge_floor = two_l / p.lambda();
        Ok(match self.mode {
            ScheduleMode::Exact => two_l / p.lambda().max(lambda_prime(t, p)),
            ScheduleMode::Simplified => {
                let tt = T::count(t);
                if tt <= self.simplified_threshold() {
                    ridge_floor
                } else {
                    ridge_floor.min(T::of(32.0) * p.l_bound() / (p.lambda0() * tt))
                }
            }
            ScheduleMode::Constant => p.l_bound(),
        })
    }
}
