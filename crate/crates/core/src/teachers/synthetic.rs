use std::sync::Arc;

use rand::seq::index;
use rand::Rng as _;

use super::{side_pool, Output, Side, Teacher};
use crate::dynamics::TeacherProfile;
use crate::error::{Error, Result};
use crate::linear::Label;
use crate::rng::{rng_for, Rng};

/// Picks with a prescribed (precision, recall) using the true labels.
/// Only meaningful in controlled experiments.
#[derive(Debug, Clone)]
pub struct SyntheticTeacher {
    profile: TeacherProfile,
    side: Side,
    seed: u64,
    truth: Arc<Vec<Label>>,
    rng: Rng,
    log: Vec<PickOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickOutcome {
    pub ids: Vec<usize>,
    pub true_picks: usize,
    pub contaminants: usize,
    /// Contaminants asked for by the profile; larger than `contaminants` when the pool ran out.
    pub wanted_contaminants: usize,
}

impl PickOutcome {
    pub fn clamped(&self) -> bool {
        self.contaminants < self.wanted_contaminants
    }

    pub fn achieved_precision(&self) -> Option<f64> {
        (!self.ids.is_empty()).then(|| self.true_picks as f64 / self.ids.len() as f64)
    }
}

impl SyntheticTeacher {
    /// `truth[id]` is the binary ground truth of example `id`.
    pub fn new(profile: TeacherProfile, side: Side, truth: Arc<Vec<Label>>, seed: u64) -> Result<Self> {
        if profile.precision() == 0.0 && profile.recall() > 0.0 {
            return Err(Error::DegenerateTeacher { precision: 0.0 });
        }
        Ok(Self {
            profile,
            side,
            seed,
            truth,
            rng: rng_for(seed, &[0]),
            log: Vec::new(),
        })
    }

    pub fn profile(&self) -> TeacherProfile {
        self.profile
    }

    /// Every pick made so far, in order.
    pub fn log(&self) -> &[PickOutcome] {
        &self.log
    }

    pub fn clamped_picks(&self) -> usize {
        self.log.iter().filter(|p| p.clamped()).count()
    }
}

impl Teacher for SyntheticTeacher {
    fn side(&self) -> Side {
        self.side
    }

    fn pick(&mut self, outputs: &[Output]) -> Result<Vec<usize>> {
        let outcome = synthetic_pick(outputs, &self.truth, self.profile, self.side, &mut self.rng)?;
        let ids = outcome.ids.clone();
        self.log.push(outcome);
        Ok(ids)
    }

    fn refresh(&mut self, chunk: usize) -> Result<()> {
        self.rng = rng_for(self.seed, &[1, chunk as u64]);
        Ok(())
    }
}

/// Each true error of the examined pool is kept with probability `R`; then
/// `round_half_up(kept * (1 - P) / P)` non-errors are drawn without replacement.
pub fn synthetic_pick(
    outputs: &[Output],
    truth: &[Label],
    profile: TeacherProfile,
    side: Side,
    rng: &mut Rng,
) -> Result<PickOutcome> {
    let mut errors = Vec::new();
    let mut clean = Vec::new();
    for o in side_pool(outputs, side) {
        let t = *truth.get(o.id).ok_or_else(|| {
            Error::Teacher(format!("no ground truth for example {}", o.id))
        })?;
        if t == o.predicted {
            clean.push(o.id);
        } else {
            errors.push(o.id);
        }
    }
    let (p, r) = (profile.precision(), profile.recall());
    let mut ids: Vec<usize> = errors.into_iter().filter(|_| rng.gen_bool(r)).collect();
    let true_picks = ids.len();
    let wanted = if true_picks == 0 {
        0
    } else {
        (true_picks as f64 * (1.0 - p) / p + 0.5).floor() as usize
    };
    let contaminants = wanted.min(clean.len());
    ids.extend(index::sample(rng, clean.len(), contaminants).into_iter().map(|i| clean[i]));
    Ok(PickOutcome {
        ids,
        true_picks,
        contaminants,
        wanted_contaminants: wanted,
    })
}
