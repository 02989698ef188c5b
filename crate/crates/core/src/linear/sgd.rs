//! Primal stochastic (sub)gradient training for the two linear losses.
//!
//! Step size follows `eta_t = eta_0 / (1 + l2 * t)` over minibatch steps `t`,
//! the bias is not regularized, and the visit order of each epoch is a seeded
//! shuffle, so a run is a pure function of (data order, config, warm start).

use rand::seq::SliceRandom;

use super::model::{LabeledExample, LinearModel, Sample};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 0,
            batch_size: 16,
        }
    }
}

impl TrainConfig {
    /// `epochs == 0` is accepted and means "return the starting point".
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidConfig(format!("l2 must be >= 0, got {}", self.l2)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `max(0, 1 - y s)`
    Hinge,
    /// `ln(1 + exp(-y s))`
    Logistic,
}

impl Loss {
    fn value(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - margin).max(0.0),
            // ln(1 + e^-m), stable for both signs of m
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// d loss / d margin
    fn slope(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => -sigmoid(-margin),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `l2 / 2 ||w||^2 + mean loss`.
pub fn objective(samples: &[Sample<'_>], loss: Loss, l2: f64, model: &LinearModel) -> f64 {
    let reg = 0.5 * l2 * model.weights().iter().map(|w| w * w).sum::<f64>();
    if samples.is_empty() {
        return reg;
    }
    let data: f64 = samples
        .iter()
        .map(|s| loss.value(s.label.sign() * model.score(s.features)))
        .sum();
    reg + data / samples.len() as f64
}

/// Full-batch gradient of [`objective`] as `(d/dw, d/db)`.
pub fn gradient(samples: &[Sample<'_>], loss: Loss, l2: f64, model: &LinearModel) -> (Vec<f64>, f64) {
    let mut gw: Vec<f64> = model.weights().iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    let scale = 1.0 / samples.len().max(1) as f64;
    for s in samples {
        let y = s.label.sign();
        let g = loss.slope(y * model.score(s.features)) * y * scale;
        if g != 0.0 {
            for (acc, x) in gw.iter_mut().zip(s.features) {
                *acc += g * x;
            }
            gb += g;
        }
    }
    (gw, gb)
}

/// Minibatch SGD on `samples`. Unlike [`train_svm`] / [`train_logistic`] this
/// accepts single-class data, which the retraining loop produces early on.
pub fn fit_linear(
    samples: &[Sample<'_>],
    loss: Loss,
    cfg: &TrainConfig,
    warm_start: Option<&LinearModel>,
) -> Result<LinearModel> {
    cfg.validate()?;
    let dim = match (samples.first(), warm_start) {
        (Some(s), _) => s.features.len(),
        (None, Some(w)) => w.dimension(),
        (None, None) => return Err(Error::Empty("training set".into())),
    };
    if let Some(bad) = samples.iter().find(|s| s.features.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.features.len(),
        });
    }
    let mut model = match warm_start {
        Some(w) if w.dimension() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.dimension(),
            })
        }
        Some(w) => w.clone(),
        None => LinearModel::zeros(dim),
    };
    if samples.is_empty() || cfg.epochs == 0 {
        return Ok(model);
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut gw = vec![0.0; dim];
    let mut step: u64 = 0;
    for epoch in 0..cfg.epochs {
        let mut rng = rng_for(cfg.seed, &[epoch as u64]);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &samples[i];
                let y = s.label.sign();
                let g = loss.slope(y * model.score(s.features)) * y * scale;
                if g != 0.0 {
                    for (acc, x) in gw.iter_mut().zip(s.features) {
                        *acc += g * x;
                    }
                    gb += g;
                }
            }
            let eta = cfg.learning_rate / (1.0 + cfg.l2 * step as f64);
            let (w, b) = model.params_mut();
            for (wi, gi) in w.iter_mut().zip(&gw) {
                *wi -= eta * (gi + cfg.l2 * *wi);
            }
            *b -= eta * gb;
            step += 1;
        }
    }
    if model.weights().iter().any(|w| !w.is_finite()) || !model.bias().is_finite() {
        return Err(Error::OutOfRange("training diverged to non-finite weights".into()));
    }
    Ok(model)
}

fn check_two_classes(data: &[LabeledExample]) -> Result<()> {
    let first = data
        .first()
        .ok_or_else(|| Error::Empty("training set".into()))?
        .label;
    if data.iter().all(|e| e.label == first) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Hinge-loss linear SVM, Pegasos-style primal SGD.
pub fn train_svm(
    data: &[LabeledExample],
    cfg: &TrainConfig,
    warm_start: Option<&LinearModel>,
) -> Result<LinearModel> {
    check_two_classes(data)?;
    let samples: Vec<Sample<'_>> = data.iter().map(LabeledExample::as_sample).collect();
    fit_linear(&samples, Loss::Hinge, cfg, warm_start)
}

/// Binary logistic regression by the same SGD loop.
pub fn train_logistic(
    data: &[LabeledExample],
    cfg: &TrainConfig,
    warm_start: Option<&LinearModel>,
) -> Result<LinearModel> {
    check_two_classes(data)?;
    let samples: Vec<Sample<'_>> = data.iter().map(LabeledExample::as_sample).collect();
    fit_linear(&samples, Loss::Logistic, cfg, warm_start)
}
