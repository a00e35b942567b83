//! Differentially private linear contextual bandits.
//!
//! The private policy adds tree-structured Laplace noise directly to the
//! ridge estimate θ̂, with a noise scale that shrinks as the estimate
//! converges. Non-private LinUCB, a constant-sensitivity private baseline
//! and a uniform policy are included for comparison, together with
//! synthetic and offline-replay environments.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod environments;
pub mod error;
pub mod model;
pub mod policies;
pub mod privacy;
mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use model::{alpha, ConfidenceParams, PrivateMode, RidgeState};
pub use policies::{
    pseudo_regret, Arm, LinUcb, Policy, PolicyKind, PrivateLinUcbConstant, PrivateLinUcbDgs,
    RandomPolicy,
};
pub use privacy::{
    MechanismOptions, NoiseShape, PrivacyParams, ScheduleMode, SensitivitySchedule, TreeMechanism,
};
pub use scalar::{l2_distance, Scalar};

pub type Ridge = RidgeState<f64>;
pub type Confidence = ConfidenceParams<f64>;
pub type Privacy = PrivacyParams<f64>;
pub type Schedule = SensitivitySchedule<f64>;
pub type Mechanism = TreeMechanism<f64>;
pub type Candidate = Arm<f64>;
pub type DgsPolicy = PrivateLinUcbDgs<f64>;
pub type ConstantPolicy = PrivateLinUcbConstant<f64>;
pub type Synthetic = environments::SyntheticEnv<f64>;
pub type Replay = environments::ReplayEnv<f64>;

/// Library version recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
