//! Small synthetic stand-in for a preprocessed listening dataset.

use std::fs;
use std::path::{Path, PathBuf};

use dpbandit::seed::child_seed;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub items: usize,
    pub d: usize,
    pub users: usize,
    /// Fraction of items each user has listened to.
    pub positive_rate: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self { items: 600, d: 25, users: 4, positive_rate: 0.06 }
    }
}

/// Writes `features.csv` (`id,f1..fd`) and `interactions.csv`
/// (`user_id,item_id`) into `dir` and returns their paths.
///
/// Each user has a hidden taste vector; the items scoring highest under it
/// are that user's positives, so a linear learner has something to find.
pub fn generate(dir: &Path, seed: u64, spec: &FixtureSpec) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, 0, "fixture-items"));
    let items: Vec<Vec<f64>> = (0..spec.items)
        .map(|_| {
            let x: Vec<f64> = (0..spec.d).map(|_| normal(&mut rng)).collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            x.into_iter().map(|v| v / n).collect()
        })
        .collect();

    let features = dir.join("features.csv");
    let mut w = csv::Writer::from_path(&features).map_err(|e| csv_err(&features, e))?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=spec.d).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(|e| csv_err(&features, e))?;
    for (id, x) in items.iter().enumerate() {
        let mut rec = vec![id.to_string()];
        rec.extend(x.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).map_err(|e| csv_err(&features, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&features, e))?;

    let interactions = dir.join("interactions.csv");
    let mut w = csv::Writer::from_path(&interactions).map_err(|e| csv_err(&interactions, e))?;
    w.write_record(["user_id", "item_id"]).map_err(|e| csv_err(&interactions, e))?;
    let per_user = ((spec.items as f64 * spec.positive_rate).round() as usize).max(1);
    for user in 0..spec.users {
        let mut urng = ChaCha8Rng::seed_from_u64(child_seed(seed, user as u64, "fixture-user"));
        let taste: Vec<f64> = (0..spec.d).map(|_| normal(&mut urng)).collect();
        let mut scored: Vec<(f64, usize)> = items
            .iter()
            .enumerate()
            .map(|(id, x)| {
                let s: f64 = x.iter().zip(&taste).map(|(a, b)| a * b).sum();
                (s + 0.3 * normal(&mut urng), id)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut liked: Vec<usize> = scored.iter().take(per_user).map(|&(_, id)| id).collect();
        liked.sort_unstable();
        for id in liked {
            w.write_record([user.to_string(), id.to_string()])
                .map_err(|e| csv_err(&interactions, e))?;
        }
    }
    w.flush().map_err(|e| BenchError::io(&interactions, e))?;
    Ok((features, interactions))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    BenchError::Data(format!("{}: {e}", path.display()))
}
