use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;

use super::{side_pool, Output, Side, Teacher};
use crate::data::LabeledPool;
use crate::error::{Error, Result};
use crate::features::{hog, HogConfig, Image};
use crate::linear::{
    pca_fit, train_logistic, Label, LabeledExample, LinearModel, PcaModel, Standardizer, TrainConfig,
};
use crate::matrix::FeatureMatrix;
use crate::rng::{derive_seed, rng_for};

const RESAMPLE_ATTEMPTS: u64 = 5;

/// HOG descriptors of every example, indexed by example id.
pub fn hog_view(images: &[Image], cfg: &HogConfig) -> Result<FeatureMatrix> {
    let rows = images
        .par_iter()
        .map(|img| hog(img, cfg))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedTeacherConfig {
    /// Pool examples drawn for each (re)fit.
    pub sample_size: usize,
    pub pca_dim: usize,
    pub hog: HogConfig,
    pub train: TrainConfig,
    /// Repeat minority-class samples so both classes weigh equally.
    pub balance: bool,
}

impl Default for LearnedTeacherConfig {
    fn default() -> Self {
        Self {
            sample_size: 1000,
            pca_dim: 64,
            hog: HogConfig::default(),
            train: TrainConfig { epochs: 20, ..TrainConfig::default() },
            balance: true,
        }
    }
}

/// HOG -> PCA -> standardize -> logistic model for "is `positive_class`".
#[derive(Debug, Clone)]
pub struct LearnedTeacher {
    side: Side,
    positive_class: usize,
    hog_cfg: HogConfig,
    pca: PcaModel,
    scaler: Standardizer,
    model: LinearModel,
    view: Arc<FeatureMatrix>,
    pool: LabeledPool,
    cfg: LearnedTeacherConfig,
    seed: u64,
}

fn draw(pool: &LabeledPool, size: usize, seed: u64, attempt: u64) -> Vec<usize> {
    if size >= pool.len() {
        return (0..pool.len()).collect();
    }
    let mut idx = index::sample(&mut rng_for(seed, &[attempt]), pool.len(), size).into_vec();
    idx.sort_unstable();
    idx
}

/// Fits a teacher on a random subsample of `pool`. `view` holds the HOG rows
/// of every example id the teacher may be asked about.
pub fn teacher_fit(
    view: Arc<FeatureMatrix>,
    pool: &LabeledPool,
    positive_class: usize,
    side: Side,
    cfg: &LearnedTeacherConfig,
    seed: u64,
) -> Result<LearnedTeacher> {
    if cfg.sample_size == 0 || cfg.pca_dim == 0 {
        return Err(Error::InvalidConfig("teacher sample size and PCA dimension must be >= 1".into()));
    }
    let truth = |pos: usize| pool.labels()[pos] == positive_class;
    let picked = (0..RESAMPLE_ATTEMPTS)
        .map(|a| draw(pool, cfg.sample_size, seed, a))
        .find(|s| s.iter().any(|p| truth(*p)) && s.iter().any(|p| !truth(*p)))
        .ok_or_else(|| {
            Error::Teacher(format!(
                "no two-class sample for class {positive_class} after {RESAMPLE_ATTEMPTS} draws"
            ))
        })?;
    let ids: Vec<usize> = picked.iter().map(|p| pool.ids()[*p]).collect();
    if let Some(bad) = ids.iter().find(|id| **id >= view.rows()) {
        return Err(Error::Teacher(format!("example {bad} has no HOG row")));
    }
    let raw = view.select(&ids);
    let k = cfg.pca_dim.min(raw.cols()).min(raw.rows());
    // the PCA start vector follows the training seed so a full-pool fit ignores `seed`
    let pca = pca_fit(&raw, k, cfg.train.seed)?;
    let projected = FeatureMatrix::from_rows(
        &raw.iter_rows().map(|r| pca.transform(r)).collect::<Result<Vec<_>>>()?,
    )?;
    let scaler = Standardizer::fit(&projected)?;
    let x = scaler.transform_matrix(&projected)?;
    let mut examples: Vec<LabeledExample> = picked
        .iter()
        .zip(x.iter_rows())
        .map(|(p, row)| LabeledExample::new(row.to_vec(), Label::from_bool(truth(*p))))
        .collect();
    if cfg.balance {
        balance(&mut examples);
    }
    let model = train_logistic(&examples, &cfg.train, None)?;
    Ok(LearnedTeacher {
        side,
        positive_class,
        hog_cfg: cfg.hog,
        pca,
        scaler,
        model,
        view,
        pool: pool.clone(),
        cfg: cfg.clone(),
        seed,
    })
}

/// Cycles through the minority class until both classes have equal counts.
fn balance(examples: &mut Vec<LabeledExample>) {
    let pos: Vec<usize> = (0..examples.len()).filter(|i| examples[*i].label.is_positive()).collect();
    let neg: Vec<usize> = (0..examples.len()).filter(|i| !examples[*i].label.is_positive()).collect();
    let (small, large) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
    if small.is_empty() {
        return;
    }
    let extra: Vec<LabeledExample> = small
        .iter()
        .cycle()
        .take(large.len() - small.len())
        .map(|i| examples[*i].clone())
        .collect();
    examples.extend(extra);
}

impl LearnedTeacher {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn positive_class(&self) -> usize {
        self.positive_class
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn hog_config(&self) -> HogConfig {
        self.hog_cfg
    }

    /// The teacher's own verdict on example `id`.
    pub fn classify(&self, id: usize) -> Result<Label> {
        if id >= self.view.rows() {
            return Err(Error::Teacher(format!("example {id} has no HOG row")));
        }
        let mut z = self.pca.transform(self.view.row(id))?;
        self.scaler.transform_in_place(&mut z);
        self.model.predict(&z)
    }
}

impl Teacher for LearnedTeacher {
    fn side(&self) -> Side {
        self.side
    }

    /// Flags pool outputs the teacher labels differently from the classifier.
    fn pick(&mut self, outputs: &[Output]) -> Result<Vec<usize>> {
        let mut ids = Vec::new();
        for o in side_pool(outputs, self.side) {
            if self.classify(o.id)? != o.predicted {
                ids.push(o.id);
            }
        }
        Ok(ids)
    }

    /// Refits on a fresh random draw from the pool.
    fn refresh(&mut self, chunk: usize) -> Result<()> {
        let seed = derive_seed(self.seed, &[chunk as u64]);
        let fresh = teacher_fit(
            Arc::clone(&self.view),
            &self.pool,
            self.positive_class,
            self.side,
            &self.cfg,
            seed,
        )?;
        self.pca = fresh.pca;
        self.scaler = fresh.scaler;
        self.model = fresh.model;
        Ok(())
    }
}
