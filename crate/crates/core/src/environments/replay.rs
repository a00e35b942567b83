use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policies::Arm;
use crate::scalar::Scalar;
use crate::seed::child_seed;

use super::{cap_norm, Environment};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEnvConfig {
    pub features_path: PathBuf,
    pub interactions_path: PathBuf,
    pub d: usize,
    pub pool_size: usize,
    pub positives_per_pool: usize,
    pub seed: u64,
    pub user_id: usize,
    pub l_bound: f64,
}

impl Default for ReplayEnvConfig {
    fn default() -> Self {
        Self {
            features_path: PathBuf::from("data/items.csv"),
            interactions_path: PathBuf::from("data/interactions.csv"),
            d: 25,
            pool_size: 25,
            positives_per_pool: 1,
            seed: 0,
            user_id: 0,
            l_bound: 1.0,
        }
    }
}

/// Item features plus each user's set of positive items, loaded once and
/// shared read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayData {
    d: usize,
    item_ids: Vec<usize>,
    features: Vec<Vec<f64>>,
    row_of: HashMap<usize, usize>,
    positives: HashMap<usize, Vec<usize>>,
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}: {msg}", path.display()))
}

impl ReplayData {
    /// Reads `id,f1,...,fd` and `user_id,item_id` CSV files.
    pub fn load(features_path: &Path, interactions_path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(features_path).map_err(|e| data_err(features_path, e))?;
        let header = rdr.headers().map_err(|e| data_err(features_path, e))?.clone();
        let d = header.len().saturating_sub(1);
        let expected = std::iter::once("id".to_string()).chain((1..=d).map(|i| format!("f{i}")));
        if d == 0 || !header.iter().map(str::trim).eq(expected) {
            return Err(data_err(features_path, "header must be `id,f1,...,fd`"));
        }
        let mut item_ids = Vec::new();
        let mut features = Vec::new();
        let mut row_of = HashMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| data_err(features_path, e))?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| data_err(features_path, format!("row {}: bad number `{s}`", line + 2)))
            };
            let id: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| data_err(features_path, format!("row {}: bad id", line + 2)))?;
            let x = rec.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
            if row_of.insert(id, item_ids.len()).is_some() {
                return Err(data_err(features_path, format!("duplicate item id {id}")));
            }
            item_ids.push(id);
            features.push(x);
        }
        if item_ids.is_empty() {
            return Err(data_err(features_path, "no items"));
        }

        let mut rdr =
            csv::Reader::from_path(interactions_path).map_err(|e| data_err(interactions_path, e))?;
        let header = rdr.headers().map_err(|e| data_err(interactions_path, e))?.clone();
        if !header.iter().map(str::trim).eq(["user_id", "item_id"]) {
            return Err(data_err(interactions_path, "header must be `user_id,item_id`"));
        }
        let mut positives: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut count = 0usize;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| data_err(interactions_path, e))?;
            let field = |i: usize| -> Result<usize> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| data_err(interactions_path, format!("row {}: bad integer", line + 2)))
            };
            let (user, item) = (field(0)?, field(1)?);
            let row = *row_of.get(&item).ok_or_else(|| {
                data_err(interactions_path, format!("row {}: unknown item {item}", line + 2))
            })?;
            let list = positives.entry(user).or_default();
            if !list.contains(&row) {
                list.push(row);
            }
            count += 1;
        }
        if count == 0 {
            return Err(data_err(interactions_path, "no interactions"));
        }
        Ok(Self { d, item_ids, features, row_of, positives })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    /// Users sorted ascending.
    pub fn users(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.positives.keys().copied().collect();
        u.sort_unstable();
        u
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn is_positive(&self, user: usize, item_id: usize) -> bool {
        match (self.positives.get(&user), self.row_of.get(&item_id)) {
            (Some(list), Some(row)) => list.contains(row),
            _ => false,
        }
    }
}

/// Offline replay for one user: each pool holds one logged positive and
/// `pool_size − 1` items the user never interacted with.
#[derive(Debug, Clone)]
pub struct ReplayEnv<T> {
    data: Arc<ReplayData>,
    features: Vec<Vec<T>>,
    user_id: usize,
    pool_size: usize,
    l_bound: T,
    rng: ChaCha8Rng,
    positive_rows: Vec<usize>,
    positive_set: HashSet<usize>,
    negative_rows: Vec<usize>,
    flips: BTreeSet<(usize, usize)>,
}

impl<T: Scalar> ReplayEnv<T> {
    pub fn new(data: Arc<ReplayData>, config: &ReplayEnvConfig) -> Result<Self> {
        if config.d != data.dim() {
            return Err(Error::Config(format!(
                "config d={} but feature file has {} columns",
                config.d,
                data.dim()
            )));
        }
        if config.positives_per_pool != 1 {
            return Err(Error::Config("replay pools hold exactly one positive".into()));
        }
        if config.pool_size == 0 {
            return Err(Error::Config("pool_size must be positive".into()));
        }
        let positive_rows = data
            .positives
            .get(&config.user_id)
            .cloned()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::Data(format!("user {} has no positive items", config.user_id)))?;
        let positive_set: HashSet<usize> = positive_rows.iter().copied().collect();
        let negative_rows: Vec<usize> =
            (0..data.num_items()).filter(|r| !positive_set.contains(r)).collect();
        if negative_rows.len() + 1 < config.pool_size {
            return Err(Error::Data(format!(
                "user {} has only {} zero-reward items for pools of {}",
                config.user_id,
                negative_rows.len(),
                config.pool_size
            )));
        }
        let l = T::of(config.l_bound);
        let features = data
            .features
            .iter()
            .map(|x| {
                let mut v: Vec<T> = x.iter().map(|&f| T::of(f)).collect();
                cap_norm(&mut v, l);
                v
            })
            .collect();
        Ok(Self {
            features,
            user_id: config.user_id,
            pool_size: config.pool_size,
            l_bound: l,
            rng: ChaCha8Rng::seed_from_u64(child_seed(config.seed, config.user_id as u64, "replay-pool")),
            positive_rows,
            positive_set,
            negative_rows,
            flips: BTreeSet::new(),
            data,
        })
    }

    pub fn user_id(&self) -> usize {
        self.user_id
    }

    fn row(&self, item_id: usize) -> Option<usize> {
        self.data.row_of.get(&item_id).copied()
    }
}

impl<T: Scalar> Environment<T> for ReplayEnv<T> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn l_bound(&self) -> T {
        self.l_bound
    }

    fn pool(&mut self, t: usize) -> Result<Vec<Arm<T>>> {
        if t == 0 {
            return Err(Error::Input("rounds start at 1".into()));
        }
        let pos = self.positive_rows[self.rng.random_range(0..self.positive_rows.len())];
        let mut rows = vec![pos];
        rows.extend(
            rand::seq::index::sample(&mut self.rng, self.negative_rows.len(), self.pool_size - 1)
                .into_iter()
                .map(|i| self.negative_rows[i]),
        );
        rows.shuffle(&mut self.rng);
        Ok(rows
            .into_iter()
            .map(|r| Arm::new(self.data.item_ids[r], self.features[r].clone()))
            .collect())
    }

    fn reward(&self, arm: &Arm<T>, t: usize) -> T {
        let hit = self.row(arm.id).is_some_and(|r| self.positive_set.contains(&r));
        let flipped = self.flips.contains(&(t, arm.id));
        if hit != flipped {
            T::one()
        } else {
            T::zero()
        }
    }

    fn mean_reward(&self, _arm: &Arm<T>) -> Option<T> {
        None
    }

    fn theta_star(&self) -> Option<&[T]> {
        None
    }

    fn modify_reward(&mut self, t: usize, arm_id: usize, _delta: T) {
        if !self.flips.insert((t, arm_id)) {
            self.flips.remove(&(t, arm_id));
        }
    }
}
