use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::evaluate::multiclass_accuracy;
use super::prepare::{teacher_view, DataSpec, FeatureSpec, Loaded, Pipeline};
use super::settings::{bpt_config, split_spec, teacher_choice, TeacherChoice};
use super::{prepare_out, write_csv, write_json, Ctx, Report};
use crate::bpt::{bpt_train, evaluate_on, write_history_csv, BptConfig};
use crate::data::{split, Split, SplitSpec};
use crate::ensemble::{
    train_ensemble, Container, EnsembleConfig, LearnedTeachers, SyntheticTeachers, Task, TeacherFactory,
};
use crate::error::{Error, Result};
use crate::features::HogConfig;
use crate::linear::{train_svm, Label, LabeledExample, LinearModel, MetricsRecord, TrainConfig};
use crate::matrix::FeatureMatrix;
use crate::rng::derive_seed;
use crate::teachers::{teacher_fit, Side, SyntheticTeacher, Teacher};

/// Describes what a model container holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub(crate) enum TaskInfo {
    Binary { class: usize, n_classes: usize },
    Ensemble { n_classes: usize },
}

impl TaskInfo {
    pub fn store(&self, c: &mut Container) -> Result<()> {
        c.insert("task", serde_json::to_vec(self)?);
        Ok(())
    }

    pub fn restore(c: &Container) -> Result<Self> {
        serde_json::from_slice(c.require("task")?).map_err(|e| Error::Format(format!("task entry: {e}")))
    }
}

struct Settings {
    data: DataSpec,
    features: FeatureSpec,
    bpt: BptConfig,
    split: SplitSpec,
    teacher: TeacherChoice,
}

fn settings(ctx: &Ctx) -> Result<Settings> {
    let data = DataSpec::from_config(ctx.source("synth-images")?, &ctx.cfg, ctx.seed)?;
    let features = FeatureSpec::from_config(&ctx.cfg, ctx.seed)?;
    let bpt = bpt_config(&ctx.cfg, ctx.seed)?;
    let split = split_spec(&ctx.cfg, ctx.seed, bpt.chunk_size)?;
    let teacher = teacher_choice(&ctx.cfg, &features)?;
    Ok(Settings { data, features, bpt, split, teacher })
}

struct Prepared {
    data: Loaded,
    split: Split,
    pipeline: Pipeline,
    x: FeatureMatrix,
    labels: Vec<usize>,
}

fn prepare(s: &Settings) -> Result<Prepared> {
    let data = s.data.load()?;
    let labels = data
        .train
        .labels()
        .ok_or_else(|| Error::InvalidConfig("training data has no labels to evaluate against".into()))?
        .to_vec();
    let split = split(&data.train, &s.split)?;
    let (pipeline, x) = Pipeline::fit(&data.train, &s.features)?;
    Ok(Prepared { data, split, pipeline, x, labels })
}

fn teacher_pair(
    s: &Settings,
    p: &Prepared,
    class: usize,
    truth: &Arc<Vec<Label>>,
    seed: u64,
) -> Result<(Box<dyn Teacher>, Box<dyn Teacher>)> {
    let (s1, s2) = (derive_seed(seed, &[1]), derive_seed(seed, &[2]));
    Ok(match &s.teacher {
        TeacherChoice::Synthetic { positive, negative } => (
            Box::new(SyntheticTeacher::new(*positive, Side::Positive, truth.clone(), s1)?),
            Box::new(SyntheticTeacher::new(*negative, Side::Negative, truth.clone(), s2)?),
        ),
        TeacherChoice::Learned(cfg) => {
            let view = teacher_view(&p.data.train, &p.x, &s.features.hog)?;
            (
                Box::new(teacher_fit(view.clone(), &p.split.pool, class, Side::Positive, cfg, s1)?),
                Box::new(teacher_fit(view, &p.split.pool, class, Side::Negative, cfg, s2)?),
            )
        }
    })
}

fn teacher_json(t: &TeacherChoice) -> serde_json::Value {
    match t {
        TeacherChoice::Synthetic { positive, negative } => json!({
            "kind": "synthetic",
            "positive": [positive.precision(), positive.recall()],
            "negative": [negative.precision(), negative.recall()],
        }),
        TeacherChoice::Learned(c) => json!({
            "kind": "learned",
            "sample_size": c.sample_size,
            "pca_dim": c.pca_dim,
            "hog": hog_json(&c.hog),
        }),
    }
}

fn hog_json(h: &HogConfig) -> serde_json::Value {
    json!({ "cell": h.cell_size, "bins": h.orientations, "block": h.block_size })
}

/// Fully supervised reference on the same examples.
pub fn supervised_oracle(
    x: &FeatureMatrix,
    ids: &[usize],
    truth: &[Label],
    cfg: &TrainConfig,
) -> Result<(LinearModel, MetricsRecord)> {
    let data: Vec<LabeledExample> = ids.iter().map(|id| LabeledExample::new(x.row(*id).to_vec(), truth[*id])).collect();
    let model = train_svm(&data, cfg, None)?;
    let m = evaluate_on(&model, x, ids, truth)?;
    Ok((model, m))
}

pub(super) fn run_binary(ctx: &Ctx) -> Result<Report> {
    let s = settings(ctx)?;
    let class: usize = ctx.cfg.get("class", 0)?;
    let oracle: bool = ctx.cfg.get("oracle", true)?;
    let oracle_cfg = TrainConfig {
        epochs: ctx.cfg.get("oracle_epochs", 20)?,
        seed: derive_seed(ctx.seed, &[0x0ac1e]),
        ..TrainConfig::default()
    };
    ctx.cfg.reject_unknown()?;

    let p = prepare(&s)?;
    let n_classes = p.data.train.n_classes();
    if class >= n_classes {
        return Err(Error::InvalidConfig(format!("class {class} >= n_classes {n_classes}")));
    }
    let truth: Arc<Vec<Label>> = Arc::new(p.labels.iter().map(|c| Label::from_bool(*c == class)).collect());
    let (mut pos, mut neg) = teacher_pair(&s, &p, class, &truth, derive_seed(ctx.seed, &[0x7e]))?;
    let ids: Vec<usize> = p.split.stream.ids().collect();
    let mut eval = |m: &LinearModel| evaluate_on(m, &p.x, &ids, &truth);
    let outcome = bpt_train(&p.x, &p.split.stream, pos.as_mut(), neg.as_mut(), &s.bpt, Some(&mut eval))?;
    let final_m = evaluate_on(&outcome.model, &p.x, &ids, &truth)?;
    let initial = evaluate_on(&LinearModel::zeros(p.x.cols()), &p.x, &ids, &truth)?;
    let oracle_m = oracle.then(|| supervised_oracle(&p.x, &ids, &truth, &oracle_cfg).map(|r| r.1)).transpose()?;

    prepare_out(&ctx.out)?;
    let history_path = ctx.path("history.csv");
    write_history_csv(&outcome.state.history, &history_path)?;
    let mut c = Container::new();
    c.insert("binary", outcome.model.to_bytes()?);
    p.pipeline.store(&mut c)?;
    TaskInfo::Binary { class, n_classes }.store(&mut c)?;
    let model_path = ctx.path("model.bpte");
    c.save(&model_path)?;

    let summary = json!({
        "command": "train-binary",
        "seed": ctx.seed,
        "dataset": p.data.train.provenance(),
        "class": class,
        "stream_size": ids.len(),
        "pool_size": p.split.pool.len(),
        "feature_dim": p.x.cols(),
        "teacher": teacher_json(&s.teacher),
        "iterations": outcome.state.history.len() - 1,
        "retrain_set": outcome.state.retrain.len(),
        "initial": initial,
        "final": final_m,
        "oracle": oracle_m,
    });
    let summary_path = ctx.path("summary.json");
    write_json(&summary_path, &summary)?;
    Ok(Report { files: vec![history_path, model_path, summary_path], summary })
}

#[derive(Serialize)]
struct ClassRow {
    class: usize,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct PairRow {
    i: usize,
    j: usize,
    set_size: usize,
    fallback: bool,
    f1: Option<f64>,
}

pub(super) fn run_multi(ctx: &Ctx) -> Result<Report> {
    let s = settings(ctx)?;
    ctx.cfg.reject_unknown()?;

    let p = prepare(&s)?;
    let n = p.data.train.n_classes();
    let factory: Box<dyn TeacherFactory> = match &s.teacher {
        TeacherChoice::Synthetic { positive, negative } => Box::new(SyntheticTeachers {
            positive: *positive,
            negative: *negative,
            labels: Arc::new(p.labels.clone()),
        }),
        TeacherChoice::Learned(cfg) => Box::new(LearnedTeachers {
            view: teacher_view(&p.data.train, &p.x, &s.features.hog)?,
            pool: p.split.pool.clone(),
            cfg: cfg.clone(),
        }),
    };
    let ecfg = EnsembleConfig { bpt: s.bpt.clone(), workers: ctx.workers };
    let trained = train_ensemble(&p.x, &p.split.stream, &p.split.pool, n, factory.as_ref(), &ecfg, Some(&p.labels))?;
    let model = &trained.model;

    let mut class_rows = Vec::new();
    let mut pair_rows = Vec::new();
    for r in &trained.reports {
        match r.task {
            Task::OneVsRest(class) => {
                let m = r.final_metrics.expect("labels supplied");
                class_rows.push(ClassRow {
                    class,
                    accuracy: m.accuracy,
                    precision: m.precision,
                    recall: m.recall,
                    f1: m.f1,
                    iterations: r.history.len().saturating_sub(1),
                });
            }
            Task::Pair(i, j) => pair_rows.push(PairRow {
                i,
                j,
                set_size: r.set_size,
                fallback: r.fallback,
                f1: r.final_metrics.map(|m| m.f1),
            }),
        }
    }
    let stream_ids: Vec<usize> = p.split.stream.ids().collect();
    let all_ids: Vec<usize> = (0..p.x.rows()).collect();
    let stream_acc = multiclass_accuracy(model, &p.x, &stream_ids, &p.labels)?.accuracy();
    let train_acc = multiclass_accuracy(model, &p.x, &all_ids, &p.labels)?.accuracy();
    let test_acc = match &p.data.test {
        Some(test) => {
            let xt = p.pipeline.transform(test)?;
            let labels = test.labels().ok_or_else(|| Error::InvalidConfig("test data has no labels".into()))?;
            let ids: Vec<usize> = (0..xt.rows()).collect();
            Some(multiclass_accuracy(model, &xt, &ids, labels)?.accuracy())
        }
        None => None,
    };

    prepare_out(&ctx.out)?;
    let class_path = ctx.path("per_class.csv");
    write_csv(&class_path, &["class", "accuracy", "precision", "recall", "f1", "iterations"], &class_rows)?;
    let pair_path = ctx.path("pairs.csv");
    write_csv(&pair_path, &["i", "j", "set_size", "fallback", "f1"], &pair_rows)?;
    let mut c = model.to_container()?;
    p.pipeline.store(&mut c)?;
    TaskInfo::Ensemble { n_classes: n }.store(&mut c)?;
    let model_path = ctx.path("ensemble.bpte");
    c.save(&model_path)?;

    let fallbacks: Vec<String> = trained.fallbacks().map(|t| t.to_string()).collect();
    let summary = json!({
        "command": "train-multi",
        "seed": ctx.seed,
        "dataset": p.data.train.provenance(),
        "n_classes": n,
        "stream_size": stream_ids.len(),
        "pool_size": p.split.pool.len(),
        "feature_dim": p.x.cols(),
        "teacher": teacher_json(&s.teacher),
        "pairwise_models": model.pairwise().len(),
        "fallback_pairs": fallbacks,
        "min_class_f1": class_rows.iter().map(|r| r.f1).fold(f64::INFINITY, f64::min),
        "stream_accuracy": stream_acc,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
    });
    let summary_path = ctx.path("summary.json");
    write_json(&summary_path, &summary)?;
    Ok(Report { files: vec![class_path, pair_path, model_path, summary_path], summary })
}
