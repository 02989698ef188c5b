//! Command-line orchestration. Each command reads and validates all of its
//! settings first, then runs, then writes CSV / JSON / model files under `out`.

pub mod config;
mod dynamics;
mod evaluate;
pub mod prepare;
mod settings;
mod sweep;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

pub use config::KvConfig;
pub use prepare::{FeatureSpec, Pipeline, Source};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dynamics,
    TrainBinary,
    TrainMulti,
    Evaluate,
    TeacherSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::TrainBinary => "train-binary",
            Command::TrainMulti => "train-multi",
            Command::Evaluate => "evaluate",
            Command::TeacherSweep => "teacher-sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub dataset: Option<String>,
    pub profile: Option<String>,
    /// Extra `key=value` settings, applied last.
    pub settings: Vec<String>,
}

impl Invocation {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config: None,
            seed: None,
            out: out.into(),
            workers: None,
            dataset: None,
            profile: None,
            settings: Vec::new(),
        }
    }
}

/// Files written and the JSON summary of a finished command.
#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

pub const PROFILES: &[&str] = &["desk", "quick", "cifar-full"];

/// Defaults layered under the config file.
fn apply_profile(cfg: &mut KvConfig, name: &str) -> Result<()> {
    let table: &[(&str, &str)] = match name {
        "desk" => &[],
        // seconds-scale smoke runs
        "quick" => &[
            ("classes", "3"),
            ("per_class", "60"),
            ("test_per_class", "20"),
            ("codebook_k", "8"),
            ("codebook_samples", "2000"),
            ("reserve", "30"),
            ("chunk_size", "60"),
            ("teacher_samples", "30"),
            ("sizes", "10,20,30"),
            ("holdout", "60"),
            ("p_step", "0.25"),
            ("r_step", "0.25"),
            ("n_max", "4"),
        ],
        // the full CIFAR-10 run: hours of CPU and several GB of memory
        "cifar-full" => &[
            ("codebook_k", "1600"),
            ("patch", "6"),
            ("stride", "1"),
            ("codebook_samples", "400000"),
            ("codebook_iterations", "20"),
            ("reserve", "1000"),
            ("chunk_size", "2000"),
            ("teacher", "learned"),
            ("teacher_samples", "1000"),
            ("teacher_pca", "64"),
            ("hog_cell", "8"),
        ],
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown profile {other:?}; available: {}",
                PROFILES.join(", ")
            )))
        }
    };
    for (k, v) in table {
        cfg.set_default(k, v);
    }
    Ok(())
}

pub(crate) struct Ctx {
    pub cfg: KvConfig,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub dataset: Option<String>,
    pub profile: String,
}

impl Ctx {
    pub fn source(&self, default: &str) -> Result<Source> {
        let spec = self.dataset.clone().unwrap_or_else(|| self.cfg.string("dataset", default));
        if self.profile == "cifar-full" && !spec.starts_with("cifar10:") {
            return Err(Error::InvalidConfig("profile cifar-full needs --dataset cifar10:DIR".into()));
        }
        spec.parse()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(inv: &Invocation) -> Result<Report> {
    let mut cfg = KvConfig::new();
    let profile = inv.profile.clone().unwrap_or_else(|| "desk".into());
    apply_profile(&mut cfg, &profile)?;
    if let Some(path) = &inv.config {
        cfg.load_file(path)?;
    }
    for s in &inv.settings {
        cfg.apply_setting(s)?;
    }
    let seed = match inv.seed {
        Some(s) => s,
        None => cfg.get("seed", 0)?,
    };
    let default_workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = match inv.workers {
        Some(w) => w,
        None => cfg.get("workers", default_workers)?,
    };
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be >= 1".into()));
    }
    let ctx = Ctx { cfg, seed, workers, out: inv.out.clone(), dataset: inv.dataset.clone(), profile };
    match inv.command {
        Command::Dynamics => dynamics::run(&ctx),
        Command::TrainBinary => train::run_binary(&ctx),
        Command::TrainMulti => train::run_multi(&ctx),
        Command::Evaluate => evaluate::run(&ctx),
        Command::TeacherSweep => sweep::run(&ctx),
    }
}

pub(crate) fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub(crate) fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

/// Serialized rows with a header; a header-only file when `rows` is empty.
pub(crate) fn write_csv<T: serde::Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `min, min + step, ...` up to `max` inclusive; empty when `min > max`.
pub(crate) fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidConfig(format!("bad range {min}..{max} step {step}")));
    }
    if min > max {
        return Ok(Vec::new());
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    // rounding keeps 0.05-grids free of representation drift
    Ok((0..n).map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12).collect())
}
