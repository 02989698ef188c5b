use std::path::PathBuf;

use serde_json::json;

use super::prepare::{DataSpec, Pipeline};
use super::train::TaskInfo;
use super::{prepare_out, write_json, Ctx, Report};
use crate::ensemble::{classify, Container, EnsembleModel};
use crate::error::{Error, Result};
use crate::linear::{compute_metrics, ConfusionMatrix, Label, LinearModel};
use crate::matrix::FeatureMatrix;

/// Ensemble predictions on rows `ids` of `x`, tie-broken by row id.
pub(crate) fn multiclass_accuracy(
    model: &EnsembleModel,
    x: &FeatureMatrix,
    ids: &[usize],
    labels: &[usize],
) -> Result<ConfusionMatrix> {
    let predicted = ids
        .iter()
        .map(|id| classify(model, x.row(*id), *id as u64))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = ids.iter().map(|id| labels[*id]).collect();
    ConfusionMatrix::from_predictions(&predicted, &truth, model.n_classes())
}

pub(super) fn run(ctx: &Ctx) -> Result<Report> {
    let model_path: PathBuf = ctx
        .cfg
        .get_opt::<String>("model")?
        .ok_or_else(|| Error::InvalidConfig("evaluate needs model=PATH".into()))?
        .into();
    let data = DataSpec::from_config(ctx.source("synth-images")?, &ctx.cfg, ctx.seed)?;
    let which = ctx.cfg.string("split", "test");
    if which != "test" && which != "train" {
        return Err(Error::InvalidConfig(format!("split = {which:?}; use train or test")));
    }
    ctx.cfg.reject_unknown()?;

    let container = Container::load(&model_path)?;
    let task = TaskInfo::restore(&container)?;
    let pipeline = Pipeline::restore(&container)?;
    let loaded = data.load()?;
    let ds = match which.as_str() {
        "train" => &loaded.train,
        _ => loaded.test.as_ref().ok_or_else(|| Error::InvalidConfig("dataset has no test split".into()))?,
    };
    let labels = ds.labels().ok_or_else(|| Error::InvalidConfig("evaluation data has no labels".into()))?;
    let x = pipeline.transform(ds)?;
    let ids: Vec<usize> = (0..x.rows()).collect();

    let summary = match task {
        TaskInfo::Binary { class, n_classes } => {
            if ds.n_classes() != n_classes {
                return Err(Error::DimensionMismatch { expected: n_classes, found: ds.n_classes() });
            }
            let model = LinearModel::from_bytes(container.require("binary")?)?;
            let predicted = ids.iter().map(|i| model.predict(x.row(*i))).collect::<Result<Vec<_>>>()?;
            let truth: Vec<Label> = labels.iter().map(|c| Label::from_bool(*c == class)).collect();
            let m = compute_metrics(&predicted, &truth)?;
            json!({
                "command": "evaluate",
                "kind": "binary",
                "split": which,
                "examples": ids.len(),
                "class": class,
                "accuracy": m.accuracy,
                "metrics": m,
                "confusion": [[m.tn, m.fp], [m.fn_, m.tp]],
            })
        }
        TaskInfo::Ensemble { n_classes } => {
            if ds.n_classes() != n_classes {
                return Err(Error::DimensionMismatch { expected: n_classes, found: ds.n_classes() });
            }
            let model = EnsembleModel::from_container(&container)?;
            let cm = multiclass_accuracy(&model, &x, &ids, labels)?;
            let per_class: Vec<_> = (0..n_classes)
                .map(|c| {
                    let support: u64 = cm.counts[c].iter().sum();
                    let predicted: u64 = cm.counts.iter().map(|row| row[c]).sum();
                    json!({ "class": c, "support": support, "predicted": predicted, "correct": cm.counts[c][c] })
                })
                .collect();
            json!({
                "command": "evaluate",
                "kind": "ensemble",
                "split": which,
                "examples": ids.len(),
                "accuracy": cm.accuracy(),
                "confusion": cm.counts,
                "per_class": per_class,
            })
        }
    };
    prepare_out(&ctx.out)?;
    let path = ctx.path("evaluation.json");
    write_json(&path, &summary)?;
    Ok(Report { files: vec![path], summary })
}
