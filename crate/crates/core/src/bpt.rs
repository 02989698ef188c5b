//! The teaching loop: classify a chunk, let the two teachers pick suspected
//! errors, retrain on the corrected examples, repeat until predictions settle.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::UnlabeledStream;
use crate::error::{Error, Result};
use crate::linear::{compute_metrics, fit_linear, Label, LinearModel, Loss, MetricsRecord, Sample, TrainConfig};
use crate::matrix::FeatureMatrix;
use crate::rng::{derive_seed, rng_for};
use crate::teachers::{Output, Side, Teacher};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zero,
    /// Small Gaussian weights drawn from the run seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BptConfig {
    pub chunk_size: usize,
    pub revisit_fraction: f64,
    pub retrain_fraction: f64,
    /// Stop the inner loop once at most this fraction of the chunk changed prediction.
    pub flip_threshold: f64,
    pub max_inner_iterations: usize,
    /// Passes over the unlabeled stream.
    pub passes: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub loss: Loss,
    pub init: Init,
    /// Retrain from the latest parameters instead of the chunk-start ones.
    pub warm_from_latest: bool,
}

impl Default for BptConfig {
    fn default() -> Self {
        Self {
            chunk_size: 2000,
            revisit_fraction: 0.1,
            retrain_fraction: 0.3,
            flip_threshold: 0.005,
            max_inner_iterations: 20,
            passes: 1,
            seed: 0,
            // small steps: the retrain set is tiny and one-sided early on, and a
            // large step swings the whole decision boundary between iterations
            train: TrainConfig { learning_rate: 0.01, ..TrainConfig::default() },
            loss: Loss::Hinge,
            init: Init::Zero,
            warm_from_latest: false,
        }
    }
}

impl BptConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        unit("revisit_fraction", self.revisit_fraction)?;
        unit("retrain_fraction", self.retrain_fraction)?;
        if !(self.flip_threshold >= 0.0) {
            return Err(Error::InvalidConfig("flip_threshold must be >= 0".into()));
        }
        if self.chunk_size == 0 || self.max_inner_iterations == 0 || self.passes == 0 {
            return Err(Error::InvalidConfig(
                "chunk_size, max_inner_iterations and passes must be >= 1".into(),
            ));
        }
        self.train.validate()
    }
}

/// One row of the training history. Iteration 0 is the initial model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub chunk: usize,
    pub inner: usize,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub retrain_set: usize,
    pub flips: usize,
    pub picked_fp: usize,
    pub picked_fn: usize,
    /// Picks that came from the revisited earlier chunks.
    pub revisit_picks: usize,
}

/// Everything the loop keeps between iterations.
#[derive(Debug, Clone)]
pub struct BptState {
    pub theta_stable: LinearModel,
    /// Latest amended label of every example a teacher ever picked.
    pub retrain: BTreeMap<usize, Label>,
    /// Ids of fully processed chunks.
    pub processed: Vec<usize>,
    pub chunk_index: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct BptOutcome {
    pub model: LinearModel,
    pub state: BptState,
}

pub type Evaluator<'a> = dyn FnMut(&LinearModel) -> Result<MetricsRecord> + 'a;

fn predict_ids(model: &LinearModel, x: &FeatureMatrix, ids: &[usize]) -> Result<Vec<Label>> {
    ids.iter().map(|id| model.predict(x.row(*id))).collect()
}

fn initial_model(cfg: &BptConfig, dim: usize) -> Result<LinearModel> {
    match cfg.init {
        Init::Zero => Ok(LinearModel::zeros(dim)),
        Init::Random => {
            let mut rng = rng_for(cfg.seed, &[u64::MAX]);
            let n = Normal::new(0.0, 0.01).expect("valid normal");
            LinearModel::new((0..dim).map(|_| n.sample(&mut rng)).collect(), 0.0)
        }
    }
}

fn record(
    eval: &mut Option<&mut Evaluator<'_>>,
    model: &LinearModel,
    base: IterationRecord,
) -> Result<IterationRecord> {
    let m = match eval {
        Some(f) => Some(f(model)?),
        None => None,
    };
    Ok(IterationRecord {
        accuracy: m.map(|m| m.accuracy),
        precision: m.map(|m| m.precision),
        recall: m.map(|m| m.recall),
        f1: m.map(|m| m.f1),
        ..base
    })
}

/// Trains a binary classifier over `features` rows named by the stream,
/// guided only by the two teachers. `eval`, if given, scores the model after
/// every inner iteration for the history.
pub fn bpt_train(
    features: &FeatureMatrix,
    stream: &UnlabeledStream,
    positive: &mut dyn Teacher,
    negative: &mut dyn Teacher,
    cfg: &BptConfig,
    mut eval: Option<&mut Evaluator<'_>>,
) -> Result<BptOutcome> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::Empty("unlabeled stream".into()));
    }
    if positive.side() != Side::Positive || negative.side() != Side::Negative {
        return Err(Error::Teacher("teachers must be (positive, negative)".into()));
    }
    if let Some(bad) = stream.ids().find(|id| *id >= features.rows()) {
        return Err(Error::OutOfRange(format!("example {bad} has no feature row")));
    }
    let mut state = BptState {
        theta_stable: initial_model(cfg, features.cols())?,
        retrain: BTreeMap::new(),
        processed: Vec::new(),
        chunk_index: 0,
        history: Vec::new(),
    };
    let zero = IterationRecord {
        iteration: 0,
        chunk: 0,
        inner: 0,
        accuracy: None,
        precision: None,
        recall: None,
        f1: None,
        retrain_set: 0,
        flips: 0,
        picked_fp: 0,
        picked_fn: 0,
        revisit_picks: 0,
    };
    state.history.push(record(&mut eval, &state.theta_stable, zero.clone())?);

    let mut iteration = 0;
    let mut previous: Option<&[usize]> = None;
    for pass in 0..cfg.passes {
        for chunk in stream.chunks() {
            let k = state.chunk_index;
            if let Some(prev) = previous {
                state.processed.extend_from_slice(prev);
            }
            positive.refresh(k)?;
            negative.refresh(k)?;
            let mut theta = state.theta_stable.clone();
            let mut pre = predict_ids(&theta, features, chunk)?;
            for inner in 0..cfg.max_inner_iterations {
                let tag = [pass as u64, k as u64, inner as u64];
                let revisit: Vec<usize> = if state.processed.is_empty() {
                    Vec::new()
                } else {
                    let n = state.processed.len();
                    let take = ((n as f64 * cfg.revisit_fraction).ceil() as usize).min(n);
                    let mut picks = index::sample(&mut rng_for(cfg.seed, &[1, tag[0], tag[1], tag[2]]), n, take)
                        .into_vec();
                    picks.sort_unstable();
                    picks.into_iter().map(|i| state.processed[i]).collect()
                };
                let revisit_pred = predict_ids(&theta, features, &revisit)?;
                let outputs: Vec<Output> = chunk
                    .iter()
                    .zip(&pre)
                    .chain(revisit.iter().zip(&revisit_pred))
                    .map(|(id, p)| Output { id: *id, predicted: *p })
                    .collect();
                let fn_ids = positive.pick(&outputs)?;
                let fp_ids = negative.pick(&outputs)?;
                if fn_ids.is_empty() && fp_ids.is_empty() {
                    break;
                }
                let revisit_set: std::collections::HashSet<usize> = revisit.iter().copied().collect();
                let revisit_picks = fn_ids.iter().chain(&fp_ids).filter(|i| revisit_set.contains(i)).count();
                let mut current: BTreeMap<usize, Label> = BTreeMap::new();
                for id in &fp_ids {
                    current.insert(*id, Side::Negative.amends_to());
                }
                for id in &fn_ids {
                    current.insert(*id, Side::Positive.amends_to());
                }
                state.retrain.extend(current.iter().map(|(k, v)| (*k, *v)));

                // X_r: a random share of X_R plus every fresh pick
                let all: Vec<usize> = state.retrain.keys().copied().collect();
                let take = ((all.len() as f64 * cfg.retrain_fraction).ceil() as usize).min(all.len());
                let mut chosen: Vec<usize> =
                    index::sample(&mut rng_for(cfg.seed, &[2, tag[0], tag[1], tag[2]]), all.len(), take)
                        .into_iter()
                        .map(|i| all[i])
                        .filter(|id| !current.contains_key(id))
                        .collect();
                chosen.extend(current.keys());
                chosen.sort_unstable();
                let samples: Vec<Sample<'_>> = chosen
                    .iter()
                    .map(|id| Sample { features: features.row(*id), label: state.retrain[id] })
                    .collect();
                let train_cfg = cfg.train.with_seed(derive_seed(cfg.seed, &[3, tag[0], tag[1], tag[2]]));
                let warm = if cfg.warm_from_latest { &theta } else { &state.theta_stable };
                theta = fit_linear(&samples, cfg.loss, &train_cfg, Some(warm))?;

                let now = predict_ids(&theta, features, chunk)?;
                let flips = pre.iter().zip(&now).filter(|(a, b)| a != b).count();
                pre = now;
                iteration += 1;
                let base = IterationRecord {
                    iteration,
                    chunk: k,
                    inner: inner + 1,
                    retrain_set: state.retrain.len(),
                    flips,
                    picked_fp: fp_ids.len(),
                    picked_fn: fn_ids.len(),
                    revisit_picks,
                    ..zero.clone()
                };
                state.history.push(record(&mut eval, &theta, base)?);
                if flips as f64 <= cfg.flip_threshold * chunk.len() as f64 {
                    break;
                }
            }
            state.theta_stable = theta;
            state.chunk_index += 1;
            previous = Some(chunk);
        }
    }
    Ok(BptOutcome { model: state.theta_stable.clone(), state })
}

/// Binary metrics of `model` on the rows `ids`, with `truth[id]` as reference.
pub fn evaluate_on(
    model: &LinearModel,
    features: &FeatureMatrix,
    ids: &[usize],
    truth: &[Label],
) -> Result<MetricsRecord> {
    let predicted = ids
        .iter()
        .map(|id| {
            if *id >= features.rows() {
                return Err(Error::OutOfRange(format!("example {id} has no feature row")));
            }
            model.predict(features.row(*id))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = ids
        .iter()
        .map(|id| truth.get(*id).copied().ok_or_else(|| Error::OutOfRange(format!("no label for {id}"))))
        .collect::<Result<Vec<_>>>()?;
    compute_metrics(&predicted, &reference)
}

pub fn write_history_csv(history: &[IterationRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rec in history {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}
