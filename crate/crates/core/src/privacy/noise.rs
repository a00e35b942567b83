use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How a scalar noise scale is turned into a d-dimensional draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseShape {
    /// d i.i.d. Laplace coordinates.
    #[default]
    PerCoordinate,
    /// Norm ~ Gamma(d, scale), direction uniform on the sphere.
    L2Spherical,
}

impl NoiseShape {
    pub fn name(self) -> &'static str {
        match self {
            NoiseShape::PerCoordinate => "per_coordinate",
            NoiseShape::L2Spherical => "l2_spherical",
        }
    }
}

impl fmt::Display for NoiseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [NoiseShape::PerCoordinate, NoiseShape::L2Spherical]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise shape `{s}`")))
    }
}

/// One Laplace(0, scale) draw by inverting the CDF.
pub fn laplace<T: Scalar, R: Rng + ?Sized>(scale: T, rng: &mut R) -> T {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    let mag = -(1.0 - 2.0 * u.abs()).ln();
    T::of(mag.copysign(u)) * scale
}

pub fn laplace_density<T: Scalar>(x: T, mean: T, scale: T) -> T {
    (-(x - mean).abs() / scale).exp() / (T::of(2.0) * scale)
}

pub fn laplace_cdf<T: Scalar>(x: T, scale: T) -> T {
    let half = T::of(0.5);
    if x < T::zero() {
        half * (x / scale).exp()
    } else {
        T::one() - half * (-x / scale).exp()
    }
}

pub fn vector_noise<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    scale: T,
    shape: NoiseShape,
    rng: &mut R,
) -> Vec<T> {
    match shape {
        NoiseShape::PerCoordinate => (0..d).map(|_| laplace(scale, rng)).collect(),
        NoiseShape::L2Spherical => {
            let radius = Gamma::new(d as f64, scale.as_f64())
                .expect("gamma parameters positive")
                .sample(rng);
            let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let mut norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            while norm == 0.0 {
                dir = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            dir.into_iter().map(|v| T::of(radius * v / norm)).collect()
        }
    }
}

/// Supplier of calibrated noise vectors for the tree mechanism.
pub trait NoiseSource<T: Scalar>: Send {
    fn sample(&mut self, d: usize, scale: T, shape: NoiseShape) -> Vec<T>;
}

/// Seeded Laplace noise.
#[derive(Debug, Clone)]
pub struct LaplaceNoise {
    rng: ChaCha8Rng,
}

impl LaplaceNoise {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<T: Scalar> NoiseSource<T> for LaplaceNoise {
    fn sample(&mut self, d: usize, scale: T, shape: NoiseShape) -> Vec<T> {
        vector_noise(d, scale, shape, &mut self.rng)
    }
}

/// Always returns the zero vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl<T: Scalar> NoiseSource<T> for ZeroNoise {
    fn sample(&mut self, d: usize, _scale: T, _shape: NoiseShape) -> Vec<T> {
        vec![T::zero(); d]
    }
}

/// Shared record of every scale requested from a [`RecordingNoise`].
#[derive(Debug, Clone, Default)]
pub struct ScaleLog<T>(Arc<Mutex<Vec<T>>>);

impl<T: Clone> ScaleLog<T> {
    pub fn take(&self) -> Vec<T> {
        std::mem::take(&mut *self.0.lock().expect("scale log poisoned"))
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("scale log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Wraps another source and logs the scale of each draw.
pub struct RecordingNoise<S, T> {
    inner: S,
    log: ScaleLog<T>,
}

impl<S, T: Scalar> RecordingNoise<S, T> {
    pub fn new(inner: S) -> (Self, ScaleLog<T>) {
        let log = ScaleLog(Arc::new(Mutex::new(Vec::new())));
        (Self { inner, log: log.clone() }, log)
    }
}

impl<S: NoiseSource<T>, T: Scalar> NoiseSource<T> for RecordingNoise<S, T> {
    fn sample(&mut self, d: usize, scale: T, shape: NoiseShape) -> Vec<T> {
        self.log.0.lock().expect("scale log poisoned").push(scale);
        self.inner.sample(d, scale, shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn laplace_moments() {
        let mut r = rng(11);
        let xs: Vec<f64> = (0..100_000).map(|_| laplace(1.0, &mut r)).collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() <= 0.02, "mean {m}");
        assert!((1.9..=2.1).contains(&v), "var {v}");
    }

    #[test]
    fn laplace_ks_distance() {
        let mut r = rng(12);
        let mut xs: Vec<f64> = (0..100_000).map(|_| laplace(1.0, &mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = laplace_cdf(x, 1.0);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "ks {ks}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let a: f64 = laplace(1.0, &mut rng(5));
        let b: f64 = laplace(1.0, &mut rng(5));
        assert_eq!(a, b);
        let va: Vec<f32> = vector_noise(4, 0.3, NoiseShape::L2Spherical, &mut rng(6));
        let vb: Vec<f32> = vector_noise(4, 0.3, NoiseShape::L2Spherical, &mut rng(6));
        assert_eq!(va, vb);
    }

    #[test]
    fn per_coordinate_variance() {
        let mut r = rng(13);
        let draws: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vector_noise(10, 1.0, NoiseShape::PerCoordinate, &mut r))
            .collect();
        let avg_var = (0..10)
            .map(|j| mean_var(&draws.iter().map(|v| v[j]).collect::<Vec<_>>()).1)
            .sum::<f64>()
            / 10.0;
        assert!((1.8..=2.2).contains(&avg_var), "{avg_var}");
    }

    #[test]
    fn spherical_mean_norm() {
        let mut r = rng(14);
        let mean_norm = (0..10_000)
            .map(|_| {
                let v: Vec<f64> = vector_noise(10, 1.0, NoiseShape::L2Spherical, &mut r);
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            / 10_000.0;
        assert!((9.5..=10.5).contains(&mean_norm), "{mean_norm}");
    }

    #[test]
    fn one_dimensional_shapes_agree() {
        // Both should be Laplace(2): compare empirical quantiles of |η|.
        let mut r = rng(15);
        let mut q = |shape| {
            let mut xs: Vec<f64> = (0..40_000)
                .map(|_| vector_noise::<f64, _>(1, 2.0, shape, &mut r)[0])
                .collect();
            xs.sort_by(f64::total_cmp);
            [xs[10_000], xs[20_000], xs[30_000]]
        };
        let a = q(NoiseShape::PerCoordinate);
        let b = q(NoiseShape::L2Spherical);
        let exact = [-2.0 * 2f64.ln(), 0.0, 2.0 * 2f64.ln()];
        for i in 0..3 {
            assert!((a[i] - exact[i]).abs() < 0.06, "{a:?}");
            assert!((b[i] - exact[i]).abs() < 0.06, "{b:?}");
        }
    }

    #[test]
    fn density_ratio_bounded_by_exp_epsilon() {
        // Neighbouring inputs differ by the full sensitivity.
        let eps = 0.2f64;
        let sens = 2.0f64;
        let scale = sens / eps;
        let bound = eps.exp() * (1.0 + 1e-12);
        for i in -400..=400 {
            let x = i as f64 * 0.25;
            let p = laplace_density(x, 0.0, scale);
            let q = laplace_density(x, sens, scale);
            assert!(p / q <= bound && q / p <= bound, "x={x}");
        }
    }

    #[test]
    fn recording_logs_scales() {
        let (mut src, log) = RecordingNoise::<_, f64>::new(ZeroNoise);
        assert_eq!(src.sample(3, 0.5, NoiseShape::PerCoordinate), vec![0.0; 3]);
        src.sample(3, 0.25, NoiseShape::PerCoordinate);
        assert_eq!(log.take(), vec![0.5, 0.25]);
        assert!(log.is_empty());
    }
}
