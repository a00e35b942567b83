use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{NoiseShape, NoiseSource, PrivacyParams, SensitivitySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MechanismOptions {
    pub shape: NoiseShape,
    /// Multiply per-coordinate scales by √d so the L1 calibration covers
    /// an L2 sensitivity bound.
    pub strict: bool,
    /// Keep one draw per tree node and reuse it instead of resampling
    /// every round.
    pub store_tree: bool,
}

/// Binary-tree noise generator for a known horizon.
///
/// At round `t` every set bit `i` of `t` contributes one draw at scale
/// `Δ_{t−2ⁱ+1}/ε'`, so the round touches `popcount(t)` partial sums.
pub struct TreeMechanism<T: Scalar> {
    schedule: SensitivitySchedule<T>,
    options: MechanismOptions,
    d: usize,
    source: Box<dyn NoiseSource<T>>,
    calls: usize,
    // unit-scale draws keyed by (level, t >> level)
    nodes: HashMap<(usize, usize), Vec<T>>,
}

impl<T: Scalar> TreeMechanism<T> {
    pub fn new(
        schedule: SensitivitySchedule<T>,
        d: usize,
        options: MechanismOptions,
        source: Box<dyn NoiseSource<T>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("noise dimension must be at least 1".into()));
        }
        Ok(Self {
            schedule,
            options,
            d,
            source,
            calls: 0,
            nodes: HashMap::new(),
        })
    }

    pub fn params(&self) -> &PrivacyParams<T> {
        self.schedule.params()
    }

    pub fn schedule(&self) -> &SensitivitySchedule<T> {
        &self.schedule
    }

    pub fn options(&self) -> MechanismOptions {
        self.options
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of `tree_noise` calls so far.
    pub fn calls(&self) -> usize {
        self.calls
    }

    /// `(level, scale)` for every Laplace term used at round `t`.
    pub fn level_scales(&self, t: usize) -> Result<Vec<(usize, T)>> {
        let horizon = self.params().horizon();
        if t == 0 || t > horizon {
            return Err(Error::Range { round: t, horizon });
        }
        let eps = self.params().epsilon_level();
        let widen = if self.options.strict && self.options.shape == NoiseShape::PerCoordinate {
            T::count(self.d).sqrt()
        } else {
            T::one()
        };
        (0..self.params().depth())
            .filter(|&i| (t >> i) & 1 == 1)
            .map(|i| {
                let delta = self.schedule.sensitivity(t - (1 << i) + 1)?;
                Ok((i, delta / eps * widen))
            })
            .collect()
    }

    /// Noise vector η_t for round `t ∈ [1, T]`.
    pub fn tree_noise(&mut self, t: usize) -> Result<Vec<T>> {
        let levels = self.level_scales(t)?;
        let mut eta = vec![T::zero(); self.d];
        for (i, scale) in levels {
            if self.options.store_tree {
                let (d, shape) = (self.d, self.options.shape);
                let source = &mut self.source;
                let unit = self
                    .nodes
                    .entry((i, t >> i))
                    .or_insert_with(|| source.sample(d, T::one(), shape));
                for (e, &u) in eta.iter_mut().zip(unit.iter()) {
                    *e = *e + u * scale;
                }
            } else {
                let draw = self.source.sample(self.d, scale, self.options.shape);
                for (e, v) in eta.iter_mut().zip(draw) {
                    *e = *e + v;
                }
            }
        }
        self.calls += 1;
        Ok(eta)
    }
}

/// High-probability size of η_t under the simplified schedule,
/// `(32L/λ₀)·log(1/ζ)·⌈log₂T⌉/(t·ε)·√(2·log t + 2)`.
pub fn utility_bound<T: Scalar>(t: usize, params: &PrivacyParams<T>, zeta: T) -> T {
    let tt = T::count(t);
    T::of(32.0) * params.l_bound() / params.lambda0()
        * (T::one() / zeta).ln()
        * T::count(params.levels())
        / (tt * params.epsilon())
        * (T::of(2.0) * tt.ln().max(T::zero()) + T::of(2.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::{LaplaceNoise, RecordingNoise, ScheduleMode, ZeroNoise};

    fn schedule(mode: ScheduleMode) -> SensitivitySchedule<f64> {
        let p = PrivacyParams::new(2.0, 0.1, 1024, 1.0, 1.0, 1.0).unwrap();
        SensitivitySchedule::new(p, mode)
    }

    #[test]
    fn round_six_uses_levels_one_and_two() {
        let s = schedule(ScheduleMode::Simplified);
        let (src, log) = RecordingNoise::new(ZeroNoise);
        let mut m = TreeMechanism::new(s.clone(), 1, Default::default(), Box::new(src)).unwrap();
        m.tree_noise(6).unwrap();
        let eps = s.params().epsilon_level();
        let want = vec![s.sensitivity(5).unwrap() / eps, s.sensitivity(3).unwrap() / eps];
        assert_eq!(log.take(), want);

        m.tree_noise(1).unwrap();
        assert_eq!(log.take(), vec![s.sensitivity(1).unwrap() / eps]);
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn out_of_range_rounds() {
        let mut m = TreeMechanism::new(
            schedule(ScheduleMode::Exact),
            2,
            Default::default(),
            Box::new(ZeroNoise),
        )
        .unwrap();
        assert_eq!(m.tree_noise(0), Err(Error::Range { round: 0, horizon: 1024 }));
        assert!(m.tree_noise(1025).is_err());
        assert!(m.tree_noise(1024).is_ok());
        assert_eq!(m.calls(), 1);
    }

    #[test]
    fn strict_widens_per_coordinate_only() {
        let opts = MechanismOptions { strict: true, ..Default::default() };
        let m = TreeMechanism::new(schedule(ScheduleMode::Constant), 4, opts, Box::new(ZeroNoise))
            .unwrap();
        assert_eq!(m.level_scales(1).unwrap(), vec![(0, 1.0 / 0.2 * 2.0)]);
        let opts = MechanismOptions { strict: true, shape: NoiseShape::L2Spherical, ..opts };
        let m = TreeMechanism::new(schedule(ScheduleMode::Constant), 4, opts, Box::new(ZeroNoise))
            .unwrap();
        assert_eq!(m.level_scales(1).unwrap(), vec![(0, 1.0 / 0.2)]);
    }

    #[test]
    fn stored_tree_reuses_nodes() {
        let opts = MechanismOptions { store_tree: true, ..Default::default() };
        let s = schedule(ScheduleMode::Constant);
        let (src, log) = RecordingNoise::new(LaplaceNoise::from_seed(3));
        let mut m = TreeMechanism::new(s, 1, opts, Box::new(src)).unwrap();
        // t=4 draws node (2,1); t=5 reuses it and adds (0,5); t=6 adds (1,3).
        let e4 = m.tree_noise(4).unwrap()[0];
        let e5 = m.tree_noise(5).unwrap()[0];
        let e6 = m.tree_noise(6).unwrap()[0];
        assert_eq!(log.len(), 3);
        assert_ne!(e4, e5);
        // t=7 reuses (2,1) and (1,3), drawing only (0,7)
        let e7 = m.tree_noise(7).unwrap()[0];
        assert_eq!(log.len(), 4);
        assert_ne!(e6, e7);
        assert_eq!(log.take(), vec![1.0; 4]);
    }

    #[test]
    fn stored_and_fresh_share_marginal_scales() {
        let s = schedule(ScheduleMode::Simplified);
        let fresh =
            TreeMechanism::new(s.clone(), 1, Default::default(), Box::new(ZeroNoise)).unwrap();
        let stored = TreeMechanism::new(
            s,
            1,
            MechanismOptions { store_tree: true, ..Default::default() },
            Box::new(ZeroNoise),
        )
        .unwrap();
        for t in 1..=1024 {
            assert_eq!(fresh.level_scales(t).unwrap(), stored.level_scales(t).unwrap());
        }
    }

    #[test]
    fn stored_tree_marginal_matches_fresh_in_distribution() {
        let s = schedule(ScheduleMode::Simplified);
        let t = 200;
        let mut fresh = Vec::new();
        let mut stored = Vec::new();
        for rep in 0..4000u64 {
            let mut a = TreeMechanism::new(
                s.clone(),
                1,
                Default::default(),
                Box::new(LaplaceNoise::from_seed(rep)),
            )
            .unwrap();
            fresh.push(a.tree_noise(t).unwrap()[0].abs());
            let mut b = TreeMechanism::new(
                s.clone(),
                1,
                MechanismOptions { store_tree: true, ..Default::default() },
                Box::new(LaplaceNoise::from_seed(rep + 1_000_000)),
            )
            .unwrap();
            for u in 1..t {
                b.tree_noise(u).unwrap();
            }
            stored.push(b.tree_noise(t).unwrap()[0].abs());
        }
        fresh.sort_by(f64::total_cmp);
        stored.sort_by(f64::total_cmp);
        let (mf, ms) = (fresh[2000], stored[2000]);
        assert!((mf / ms - 1.0).abs() < 0.1, "{mf} vs {ms}");
    }

    #[test]
    fn utility_bound_values() {
        let p = PrivacyParams::new(1.0f64, 0.1, 2, 1.0, 1.0, 1.0).unwrap();
        let zeta = (-1.0f64).exp();
        assert!((utility_bound(1, &p, zeta) - 32.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(utility_bound(1000, &p, zeta) < utility_bound(100, &p, zeta));
    }
}
