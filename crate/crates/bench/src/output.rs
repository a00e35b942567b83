use std::fs;
use std::path::{Path, PathBuf};

use dpbandit::seed::child_seed;
use dpbandit::PolicyKind;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::experiments::Outcome;
use crate::sim::noise_seed;

/// Long-format table, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?;
        let to_err = |e: csv::Error| BenchError::Data(format!("{}: {e}", path.display()));
        w.write_record(&self.header).map_err(to_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(to_err)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))
    }
}

/// Paths of the files one experiment writes.
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub summary: PathBuf,
}

/// Every derived seed, so a CSV can be regenerated from its sidecar alone.
fn seed_table(cfg: &ExperimentConfig) -> Value {
    let reps = cfg.runs.max(cfg.arm_change_reps) as u64;
    let runs: Vec<Value> = (0..reps)
        .map(|r| {
            let mut noise = serde_json::Map::new();
            for p in PolicyKind::ALL.into_iter().filter(|p| p.is_private()) {
                noise.insert(p.name().into(), json!(noise_seed(cfg.master_seed, r, p)));
            }
            json!({
                "run_id": r,
                "run": child_seed(cfg.master_seed, r, "run"),
                "tape": child_seed(cfg.master_seed, r, "tape"),
                "random": child_seed(cfg.master_seed, r, "random"),
                "perturb": child_seed(cfg.master_seed, r, "perturb"),
                "noise": noise,
            })
        })
        .collect();
    json!({ "master_seed": cfg.master_seed, "derivation": "child_seed(master, index, stream)", "runs": runs })
}

pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Written> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let stem = outcome.kind.name();
    let files = Written {
        csv: dir.join(format!("{stem}.csv")),
        metadata: dir.join(format!("{stem}.meta.json")),
        summary: dir.join(format!("{stem}.summary.json")),
    };
    outcome.table.write(&files.csv)?;

    let mut resolved = cfg.clone();
    resolved.privacy.lambda0 = Some(outcome.lambda0);
    let meta = json!({
        "experiment": stem,
        "csv": files.csv.file_name().map(|f| f.to_string_lossy().into_owned()),
        "library": "dpbandit",
        "library_version": dpbandit::VERSION,
        "config": resolved,
        "config_toml": resolved.to_toml(),
        "seeds": seed_table(cfg),
        "rows": outcome.table.rows.len(),
    });
    write_json(&files.metadata, &meta)?;
    write_json(&files.summary, &outcome.summary)?;
    Ok(files)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json serializes");
    fs::write(path, text + "\n").map_err(|e| BenchError::io(path, e))
}
