use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{pair_label, EnsembleModel};
use crate::bpt::{bpt_train, evaluate_on, BptConfig, IterationRecord};
use crate::data::{LabeledPool, UnlabeledStream};
use crate::dynamics::TeacherProfile;
use crate::error::{Error, Result};
use crate::linear::{train_svm, Label, LabeledExample, LinearModel, MetricsRecord};
use crate::matrix::FeatureMatrix;
use crate::rng::derive_seed;
use crate::teachers::{teacher_fit, LearnedTeacherConfig, Side, SyntheticTeacher, Teacher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    OneVsRest(usize),
    /// Positive means the first class.
    Pair(usize, usize),
}

impl Task {
    fn path(self) -> [u64; 3] {
        match self {
            Task::OneVsRest(i) => [0, i as u64, 0],
            Task::Pair(i, j) => [1, i as u64, j as u64],
        }
    }

    /// Binary target of an example whose class is `class`.
    pub fn label(self, class: usize) -> Label {
        match self {
            Task::OneVsRest(i) | Task::Pair(i, _) => pair_label(i, class),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::OneVsRest(i) => write!(f, "ovr:{i}"),
            Task::Pair(i, j) => write!(f, "pair:{i}:{j}"),
        }
    }
}

/// Builds the two teachers of one binary task.
pub trait TeacherFactory: Sync {
    fn make(&self, task: Task, side: Side, seed: u64) -> Result<Box<dyn Teacher>>;
}

/// Teachers that see the true labels, for controlled experiments.
#[derive(Debug, Clone)]
pub struct SyntheticTeachers {
    pub positive: TeacherProfile,
    pub negative: TeacherProfile,
    /// Class of every example id.
    pub labels: Arc<Vec<usize>>,
}

impl TeacherFactory for SyntheticTeachers {
    fn make(&self, task: Task, side: Side, seed: u64) -> Result<Box<dyn Teacher>> {
        let truth = Arc::new(self.labels.iter().map(|c| task.label(*c)).collect());
        let profile = match side {
            Side::Positive => self.positive,
            Side::Negative => self.negative,
        };
        Ok(Box::new(SyntheticTeacher::new(profile, side, truth, seed)?))
    }
}

/// HOG teachers fit on the reserved pool; pair tasks only see the pair's classes.
#[derive(Debug, Clone)]
pub struct LearnedTeachers {
    pub view: Arc<FeatureMatrix>,
    pub pool: LabeledPool,
    pub cfg: LearnedTeacherConfig,
}

impl TeacherFactory for LearnedTeachers {
    fn make(&self, task: Task, side: Side, seed: u64) -> Result<Box<dyn Teacher>> {
        let (pool, class) = match task {
            Task::OneVsRest(i) => (self.pool.clone(), i),
            Task::Pair(i, j) => (self.pool.restrict(&[i, j]), i),
        };
        Ok(Box::new(teacher_fit(self.view.clone(), &pool, class, side, &self.cfg, seed)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub bpt: BptConfig,
    pub workers: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { bpt: BptConfig::default(), workers: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct TaskReport {
    pub task: Task,
    /// Examples the task was trained on (the disagreement set for pairs).
    pub set_size: usize,
    /// Trained on the labeled pool because the disagreement set was empty.
    pub fallback: bool,
    pub history: Vec<IterationRecord>,
    /// Score on the task's own training examples, when labels were supplied.
    pub final_metrics: Option<MetricsRecord>,
}

#[derive(Debug, Clone)]
pub struct EnsembleTraining {
    pub model: EnsembleModel,
    /// One-vs-rest tasks in class order, then pairs in lexicographic order.
    pub reports: Vec<TaskReport>,
}

impl EnsembleTraining {
    pub fn ovr_reports(&self) -> impl Iterator<Item = &TaskReport> {
        self.reports.iter().filter(|r| matches!(r.task, Task::OneVsRest(_)))
    }

    pub fn fallbacks(&self) -> impl Iterator<Item = Task> + '_ {
        self.reports.iter().filter(|r| r.fallback).map(|r| r.task)
    }
}

struct Shared<'a> {
    features: &'a FeatureMatrix,
    pool: &'a LabeledPool,
    teachers: &'a dyn TeacherFactory,
    cfg: &'a EnsembleConfig,
    eval_labels: Option<&'a [usize]>,
}

fn run_task(s: &Shared<'_>, task: Task, ids: &[usize]) -> Result<(LinearModel, TaskReport)> {
    let seed = derive_seed(s.cfg.bpt.seed, &task.path());
    let truth: Option<Vec<Label>> = s.eval_labels.map(|l| l.iter().map(|c| task.label(*c)).collect());
    if ids.is_empty() {
        let Task::Pair(i, j) = task else {
            return Err(Error::Empty("unlabeled stream".into()));
        };
        let model = pool_fallback(s, i, j, seed)?;
        let report = TaskReport { task, set_size: 0, fallback: true, history: Vec::new(), final_metrics: None };
        return Ok((model, report));
    }
    let stream = UnlabeledStream::from_ids(ids, s.cfg.bpt.chunk_size);
    let mut positive = s.teachers.make(task, Side::Positive, derive_seed(seed, &[1]))?;
    let mut negative = s.teachers.make(task, Side::Negative, derive_seed(seed, &[2]))?;
    let cfg = BptConfig { seed, ..s.cfg.bpt.clone() };
    let outcome = match &truth {
        Some(t) => {
            let mut eval = |m: &LinearModel| evaluate_on(m, s.features, ids, t);
            bpt_train(s.features, &stream, positive.as_mut(), negative.as_mut(), &cfg, Some(&mut eval))?
        }
        None => bpt_train(s.features, &stream, positive.as_mut(), negative.as_mut(), &cfg, None)?,
    };
    let final_metrics = truth.as_ref().map(|t| evaluate_on(&outcome.model, s.features, ids, t)).transpose()?;
    let report = TaskReport {
        task,
        set_size: ids.len(),
        fallback: false,
        history: outcome.state.history,
        final_metrics,
    };
    Ok((outcome.model, report))
}

/// Supervised pair model on the reserved pool, for an empty disagreement set.
fn pool_fallback(s: &Shared<'_>, i: usize, j: usize, seed: u64) -> Result<LinearModel> {
    let data: Vec<LabeledExample> = s
        .pool
        .restrict(&[i, j])
        .iter()
        .map(|(id, c)| {
            if id >= s.features.rows() {
                return Err(Error::OutOfRange(format!("pool example {id} has no feature row")));
            }
            Ok(LabeledExample::new(s.features.row(id).to_vec(), pair_label(i, c)))
        })
        .collect::<Result<_>>()?;
    train_svm(&data, &s.cfg.bpt.train.with_seed(seed), None)
        .map_err(|e| Error::Teacher(format!("pair ({i}, {j}) fallback: {e}")))
}

fn run_all(pool: &rayon::ThreadPool, s: &Shared<'_>, jobs: Vec<(Task, Vec<usize>)>) -> Result<Vec<(LinearModel, TaskReport)>> {
    // collect keeps task order, so the result does not depend on scheduling
    pool.install(|| jobs.par_iter().map(|(task, ids)| run_task(s, *task, ids)).collect())
}

/// Trains the N one-vs-rest models on the stream, then one pair model per
/// i < j on the examples where exactly one of f_i, f_j fired.
/// `eval_labels` (class per example id) only feeds the reported metrics.
pub fn train_ensemble(
    features: &FeatureMatrix,
    stream: &UnlabeledStream,
    pool: &LabeledPool,
    n_classes: usize,
    teachers: &dyn TeacherFactory,
    cfg: &EnsembleConfig,
    eval_labels: Option<&[usize]>,
) -> Result<EnsembleTraining> {
    if n_classes < 2 {
        return Err(Error::InvalidConfig(format!("ensemble needs >= 2 classes, got {n_classes}")));
    }
    if pool.n_classes() != n_classes {
        return Err(Error::DimensionMismatch { expected: n_classes, found: pool.n_classes() });
    }
    if let Some(c) = pool.class_counts().iter().position(|c| *c == 0) {
        return Err(Error::Teacher(format!("labeled pool has no example of class {c}")));
    }
    if stream.is_empty() {
        return Err(Error::Empty("unlabeled stream".into()));
    }
    cfg.bpt.validate()?;
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let shared = Shared { features, pool, teachers, cfg, eval_labels };
    let ids: Vec<usize> = stream.ids().collect();

    let ovr_jobs = (0..n_classes).map(|i| (Task::OneVsRest(i), ids.clone())).collect();
    let (ovr, mut reports): (Vec<LinearModel>, Vec<TaskReport>) = run_all(&threads, &shared, ovr_jobs)?.into_iter().unzip();

    let fired: Vec<Vec<bool>> = ovr
        .iter()
        .map(|m| ids.iter().map(|id| m.score(features.row(*id)) > 0.0).collect())
        .collect();
    let mut pair_jobs = Vec::new();
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            let x_ij = ids
                .iter()
                .enumerate()
                .filter(|(k, _)| fired[i][*k] != fired[j][*k])
                .map(|(_, id)| *id)
                .collect();
            pair_jobs.push((Task::Pair(i, j), x_ij));
        }
    }
    let mut pairwise = BTreeMap::new();
    for (model, report) in run_all(&threads, &shared, pair_jobs)? {
        if let Task::Pair(i, j) = report.task {
            pairwise.insert((i, j), model);
        }
        reports.push(report);
    }
    let model = EnsembleModel::new(ovr, pairwise, cfg.bpt.seed)?;
    Ok(EnsembleTraining { model, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_gaussians, SplitSpec};
    use crate::ensemble::classify;

    fn setup(n: usize, per: usize) -> (FeatureMatrix, UnlabeledStream, LabeledPool, Vec<usize>) {
        let ds = synth_gaussians(n, per, 6, 6.0, 5).unwrap();
        let sp = split(&ds, &SplitSpec { reserved_labeled: 10 * n, chunk_size: 200, seed: 1 }).unwrap();
        let labels = ds.labels().unwrap().to_vec();
        (ds.vectors().unwrap().clone(), sp.stream, sp.pool, labels)
    }

    fn synthetic(labels: &[usize], p: f64) -> SyntheticTeachers {
        let prof = TeacherProfile::new(p, p).unwrap();
        SyntheticTeachers { positive: prof, negative: prof, labels: Arc::new(labels.to_vec()) }
    }

    #[test]
    fn trains_all_models_and_beats_majority_baseline() {
        let (x, stream, pool, labels) = setup(4, 150);
        let t = synthetic(&labels, 0.8);
        let out = train_ensemble(&x, &stream, &pool, 4, &t, &EnsembleConfig::default(), Some(&labels)).unwrap();
        assert_eq!(out.model.pairwise().len(), 6);
        assert_eq!(out.reports.len(), 10);
        let ids: Vec<usize> = stream.ids().collect();
        let correct = ids
            .iter()
            .filter(|id| classify(&out.model, x.row(**id), **id as u64).unwrap() == labels[**id])
            .count();
        let acc = correct as f64 / ids.len() as f64;
        // classes are balanced, so the majority baseline is 0.25
        assert!(acc >= 0.25 + 0.3, "accuracy {acc}");
    }

    #[test]
    fn worker_count_does_not_change_the_model() {
        let (x, stream, pool, labels) = setup(3, 80);
        let t = synthetic(&labels, 0.7);
        let one = EnsembleConfig { workers: 1, ..Default::default() };
        let many = EnsembleConfig { workers: 4, ..Default::default() };
        let a = train_ensemble(&x, &stream, &pool, 3, &t, &one, None).unwrap();
        let b = train_ensemble(&x, &stream, &pool, 3, &t, &many, None).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn silent_teachers_fall_back_for_every_pair() {
        // zero recall keeps every f_i at zero, so no example separates any pair
        let (x, stream, pool, labels) = setup(3, 60);
        let silent = TeacherProfile::new(0.5, 0.0).unwrap();
        let t = SyntheticTeachers { positive: silent, negative: silent, labels: Arc::new(labels) };
        let out = train_ensemble(&x, &stream, &pool, 3, &t, &EnsembleConfig::default(), None).unwrap();
        assert_eq!(out.fallbacks().count(), 3);
        assert!(out.model.ovr().iter().all(LinearModel::is_zero));
        assert!(out.model.pairwise().values().all(|m| !m.is_zero()));
    }

    #[test]
    fn two_classes_give_one_pair() {
        let (x, stream, pool, labels) = setup(2, 80);
        let t = synthetic(&labels, 0.9);
        let out = train_ensemble(&x, &stream, &pool, 2, &t, &EnsembleConfig::default(), None).unwrap();
        assert_eq!(out.model.pairwise().len(), 1);
    }

    #[test]
    fn pool_must_cover_classes() {
        let (x, stream, pool, labels) = setup(3, 60);
        let t = synthetic(&labels, 0.9);
        let partial = pool.restrict(&[0, 1]);
        assert!(train_ensemble(&x, &stream, &partial, 3, &t, &EnsembleConfig::default(), None).is_err());
    }
}
