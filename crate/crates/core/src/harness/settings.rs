//! Typed views over the flat config shared by several commands.

use super::config::KvConfig;
use super::prepare::FeatureSpec;
use crate::bpt::{BptConfig, Init};
use crate::data::SplitSpec;
use crate::dynamics::TeacherProfile;
use crate::error::{Error, Result};
use crate::linear::TrainConfig;
use crate::rng::derive_seed;
use crate::teachers::LearnedTeacherConfig;

pub fn bpt_config(cfg: &KvConfig, seed: u64) -> Result<BptConfig> {
    let d = BptConfig::default();
    let init = match cfg.string("init", "zero").as_str() {
        "zero" => Init::Zero,
        "random" => Init::Random,
        other => return Err(Error::InvalidConfig(format!("init = {other:?}; use zero or random"))),
    };
    let c = BptConfig {
        chunk_size: cfg.get("chunk_size", 500)?,
        revisit_fraction: cfg.get("revisit_fraction", d.revisit_fraction)?,
        retrain_fraction: cfg.get("retrain_fraction", d.retrain_fraction)?,
        flip_threshold: cfg.get("flip_threshold", d.flip_threshold)?,
        max_inner_iterations: cfg.get("max_inner", d.max_inner_iterations)?,
        passes: cfg.get("passes", d.passes)?,
        seed: derive_seed(seed, &[0xb97]),
        train: TrainConfig {
            epochs: cfg.get("epochs", d.train.epochs)?,
            learning_rate: cfg.get("learning_rate", d.train.learning_rate)?,
            l2: cfg.get("l2", d.train.l2)?,
            batch_size: cfg.get("batch_size", d.train.batch_size)?,
            seed: 0,
        },
        loss: d.loss,
        init,
        warm_from_latest: cfg.get("warm_from_latest", false)?,
    };
    c.validate()?;
    Ok(c)
}

pub fn split_spec(cfg: &KvConfig, seed: u64, chunk_size: usize) -> Result<SplitSpec> {
    Ok(SplitSpec {
        reserved_labeled: cfg.get("reserve", 100)?,
        chunk_size,
        seed: derive_seed(seed, &[0x5911]),
    })
}

#[derive(Debug, Clone)]
pub enum TeacherChoice {
    Synthetic { positive: TeacherProfile, negative: TeacherProfile },
    Learned(LearnedTeacherConfig),
}

pub fn learned_config(cfg: &KvConfig, spec: &FeatureSpec) -> Result<LearnedTeacherConfig> {
    let d = LearnedTeacherConfig::default();
    Ok(LearnedTeacherConfig {
        sample_size: cfg.get("teacher_samples", d.sample_size)?,
        pca_dim: cfg.get("teacher_pca", d.pca_dim)?,
        hog: spec.hog,
        train: TrainConfig { epochs: cfg.get("teacher_epochs", d.train.epochs)?, ..d.train },
        balance: cfg.get("teacher_balance", d.balance)?,
    })
}

pub fn teacher_choice(cfg: &KvConfig, spec: &FeatureSpec) -> Result<TeacherChoice> {
    match cfg.string("teacher", "synthetic").as_str() {
        "synthetic" => {
            let p: f64 = cfg.get("precision", 0.6)?;
            let r: f64 = cfg.get("recall", 0.6)?;
            let positive = TeacherProfile::new(cfg.get("pos_precision", p)?, cfg.get("pos_recall", r)?)?;
            let negative = TeacherProfile::new(cfg.get("neg_precision", p)?, cfg.get("neg_recall", r)?)?;
            Ok(TeacherChoice::Synthetic { positive, negative })
        }
        "learned" => Ok(TeacherChoice::Learned(learned_config(cfg, spec)?)),
        other => Err(Error::InvalidConfig(format!("teacher = {other:?}; use synthetic or learned"))),
    }
}
