//! Ridge-regression sufficient statistics of a linear bandit and the
//! confidence radius used by the UCB rule.

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Sufficient statistics `A = λI + Σ x xᵀ`, `b = Σ x r` with `A⁻¹` kept in
/// step by rank-one updates.
///
/// Matrices are stored dense, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState<T> {
    d: usize,
    lambda: T,
    a: Vec<T>,
    a_inv: Vec<T>,
    b: Vec<T>,
    theta_hat: Vec<T>,
    t: usize,
}

impl<T: Scalar> RidgeState<T> {
    pub fn new(d: usize, lambda: T) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::Config(format!("ridge lambda must be positive, got {lambda}")));
        }
        let mut a = vec![T::zero(); d * d];
        let mut a_inv = vec![T::zero(); d * d];
        for i in 0..d {
            a[i * d + i] = lambda;
            a_inv[i * d + i] = T::one() / lambda;
        }
        Ok(Self {
            d,
            lambda,
            a,
            a_inv,
            b: vec![T::zero(); d],
            theta_hat: vec![T::zero(); d],
            t: 0,
        })
    }

    /// Adds one observation `(x, r)`.
    ///
    /// `A⁻¹` follows Sherman–Morrison:
    /// `A⁻¹ ← A⁻¹ − (A⁻¹x)(A⁻¹x)ᵀ / (1 + xᵀA⁻¹x)`.
    pub fn update(&mut self, x: &[T], r: T) -> Result<()> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(Error::Input("non-finite context or reward".into()));
        }
        let d = self.d;
        for i in 0..d {
            let xi = x[i];
            for j in 0..d {
                self.a[i * d + j] = self.a[i * d + j] + xi * x[j];
            }
            self.b[i] = self.b[i] + xi * r;
        }

        let u = self.mul_inv(x);
        let denom = T::one() + dot(x, &u);
        if !(denom > T::zero()) {
            return Err(Error::Numerical(format!(
                "Sherman-Morrison denominator {denom} is not positive"
            )));
        }
        // update the upper triangle and mirror it so A⁻¹ stays exactly symmetric
        for i in 0..d {
            let ui = u[i] / denom;
            for j in i..d {
                let v = self.a_inv[i * d + j] - ui * u[j];
                self.a_inv[i * d + j] = v;
                self.a_inv[j * d + i] = v;
            }
        }
        self.theta_hat = self.mul_inv(&self.b);
        self.t += 1;
        Ok(())
    }

    /// `‖x‖_{A⁻¹} = √(xᵀA⁻¹x)`.
    pub fn confidence_width(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        let q = dot(x, &self.mul_inv(x));
        if q < T::of(-1e-12) {
            return Err(Error::Numerical(format!(
                "xᵀA⁻¹x = {q} is negative; maintained inverse has drifted"
            )));
        }
        Ok(q.max(T::zero()).sqrt())
    }

    /// `A⁻¹ v`.
    pub fn mul_inv(&self, v: &[T]) -> Vec<T> {
        self.a_inv
            .chunks_exact(self.d)
            .map(|row| dot(row, v))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Number of updates since construction.
    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn a_inv(&self) -> &[T] {
        &self.a_inv
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn theta_hat(&self) -> &[T] {
        &self.theta_hat
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Input(format!(
                "expected a {}-vector, got length {}",
                self.d,
                x.len()
            )));
        }
        Ok(())
    }
}

/// Which privacy-noise term is added to the ellipsoid radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrivateMode {
    /// Plain LinUCB radius.
    Off,
    /// `(L/ε)·log₂T·√log t·log(1/ζ)/√t`, covering noise added to θ̂.
    Dynamic,
    /// `(L/ε)·log₂T·√log t·log(1/ζ)`, covering noise added to `b`.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceParams<T> {
    /// Failure probability ζ.
    pub zeta: T,
    /// Bound S on ‖θ*‖₂.
    pub s_bound: T,
    /// Bound L on ‖x‖₂.
    pub l_bound: T,
    pub epsilon: T,
    pub horizon: usize,
    pub private_mode: PrivateMode,
    pub alpha_scale: T,
}

impl<T: Scalar> ConfidenceParams<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.zeta > zero && self.zeta < T::one()) {
            return Err(Error::Config(format!("zeta must lie in (0,1), got {}", self.zeta)));
        }
        if !(self.s_bound > zero) || !(self.l_bound > zero) || !(self.alpha_scale > zero) {
            return Err(Error::Config("S, L and alpha_scale must be positive".into()));
        }
        if self.private_mode != PrivateMode::Off && !(self.epsilon > zero) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// `⌈log₂ T⌉`, at least 1. Shared by the budget split and every `log₂T` factor.
pub fn log2_levels(horizon: usize) -> usize {
    if horizon <= 2 {
        1
    } else {
        (usize::BITS - (horizon - 1).leading_zeros()) as usize
    }
}

/// Argument of the logarithm in the self-normalized ellipsoid term,
/// `(1 + t·L²/λ)/ζ`.
pub fn ellipsoid_log_argument<T: Scalar>(t: T, l_bound: T, lambda: T, zeta: T) -> T {
    (T::one() + t * l_bound * l_bound / lambda) / zeta
}

/// Privacy-noise part of the radius at round `t` (zero when mode is `Off`).
pub fn noise_term<T: Scalar>(t: usize, params: &ConfidenceParams<T>) -> T {
    let tt = T::count(t);
    let base = || {
        params.l_bound / params.epsilon
            * T::count(log2_levels(params.horizon))
            * tt.ln().max(T::zero()).sqrt()
            * (T::one() / params.zeta).ln()
    };
    match params.private_mode {
        PrivateMode::Off => T::zero(),
        PrivateMode::Dynamic => base() / tt.sqrt(),
        PrivateMode::Constant => base(),
    }
}

/// Confidence radius α_t at round `t ≥ 1`.
pub fn alpha<T: Scalar>(t: usize, params: &ConfidenceParams<T>, lambda: T, d: usize) -> Result<T> {
    if t == 0 {
        return Err(Error::Input("alpha is defined for rounds t >= 1".into()));
    }
    let tt = T::count(t);
    let ellipsoid = (T::count(d)
        * ellipsoid_log_argument(tt, params.l_bound, lambda, params.zeta).ln())
    .sqrt();
    let bias = lambda.sqrt() * params.s_bound;
    Ok(params.alpha_scale * (noise_term(t, params) + ellipsoid + bias))
}
