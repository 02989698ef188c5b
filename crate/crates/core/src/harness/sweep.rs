use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::prepare::{DataSpec, FeatureSpec, Pipeline};
use super::settings::learned_config;
use super::{grid, prepare_out, write_csv, write_json, Ctx, Report};
use crate::data::{split, SplitSpec};
use crate::error::{Error, Result};
use crate::linear::Label;
use crate::rng::{derive_seed, rng_for};
use crate::teachers::{estimate_profile, hog_view, teacher_fit, LearnedTeacherConfig, Output, ProfileEstimate, Side};

#[derive(Debug, Clone, Serialize)]
pub(crate) struct SweepRow {
    pool_size: usize,
    side: &'static str,
    accuracy: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    /// Fits whose ratio was defined and entered the means.
    estimates: usize,
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let v: Vec<f64> = xs.flatten().collect();
    let n = v.len();
    ((n > 0).then(|| v.iter().sum::<f64>() / n as f64), n)
}

pub(super) fn run(ctx: &Ctx) -> Result<Report> {
    let c = &ctx.cfg;
    let data = DataSpec::from_config(ctx.source("synth-images")?, c, ctx.seed)?;
    let features = FeatureSpec::from_config(c, ctx.seed)?;
    let teacher = learned_config(c, &features)?;
    let sizes: Vec<usize> = if c.has("sizes") {
        c.list("sizes", &[])?
    } else {
        let g = grid(c.get("sizes_min", 100.0)?, c.get("sizes_max", 2000.0)?, c.get("sizes_step", 100.0)?)?;
        g.into_iter().map(|v| v.round() as usize).collect()
    };
    let holdout: usize = c.get("holdout", 1000)?;
    let output_error: f64 = c.get("output_error", 0.3)?;
    let classes_cfg: Vec<usize> = c.list("sweep_classes", &[])?;
    let repeats: usize = c.get("repeats", 1)?;
    let reserve: usize = c.get("reserve", sizes.iter().copied().max().unwrap_or(1))?;
    let split_seed = derive_seed(ctx.seed, &[0x5911]);
    c.reject_unknown()?;
    if let Some(s) = sizes.iter().find(|s| **s == 0 || **s > reserve) {
        return Err(Error::InvalidConfig(format!("pool size {s} outside 1..={reserve} (the reserve)")));
    }
    if !(0.0..=1.0).contains(&output_error) || repeats == 0 || holdout == 0 {
        return Err(Error::InvalidConfig("need output_error in [0, 1], repeats >= 1, holdout >= 1".into()));
    }

    let loaded = data.load()?;
    let train = &loaded.train;
    let labels = train.labels().ok_or_else(|| Error::InvalidConfig("sweep data has no labels".into()))?;
    let classes: Vec<usize> = if classes_cfg.is_empty() { (0..train.n_classes()).collect() } else { classes_cfg };
    if let Some(bad) = classes.iter().find(|k| **k >= train.n_classes()) {
        return Err(Error::InvalidConfig(format!("sweep class {bad} >= n_classes {}", train.n_classes())));
    }
    let sp = split(train, &SplitSpec { reserved_labeled: reserve, chunk_size: holdout, seed: split_seed })?;
    let held: Vec<usize> = sp.stream.ids().take(holdout).collect();
    if held.len() < holdout {
        return Err(Error::InvalidConfig(format!("only {} examples left for a holdout of {holdout}", held.len())));
    }
    let view = Arc::new(match train.images() {
        Some(imgs) => hog_view(imgs, &features.hog)?,
        None => Pipeline::fit(train, &features)?.1,
    });

    let cells: Vec<(usize, usize, usize)> = sizes
        .iter()
        .flat_map(|s| classes.iter().flat_map(move |k| (0..repeats).map(move |r| (*s, *k, r))))
        .collect();
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let root = ctx.seed;
    let fit_cell = |&(size, class, rep): &(usize, usize, usize)| -> Result<[ProfileEstimate; 2]> {
        let truth: Vec<Label> = labels.iter().map(|l| Label::from_bool(*l == class)).collect();
        // the same noisy classifier outputs for every pool size
        let mut rng = rng_for(root, &[0x0a7, class as u64, rep as u64]);
        let outputs: Vec<Output> = held
            .iter()
            .map(|id| {
                let t = truth[*id];
                Output { id: *id, predicted: if rng.gen_bool(output_error) { t.flipped() } else { t } }
            })
            .collect();
        let cfg = LearnedTeacherConfig { sample_size: size, ..teacher.clone() };
        let mut out = Vec::with_capacity(2);
        for side in [Side::Positive, Side::Negative] {
            let seed = derive_seed(root, &[size as u64, class as u64, rep as u64, side as u64]);
            let mut t = teacher_fit(view.clone(), &sp.pool, class, side, &cfg, seed)?;
            out.push(estimate_profile(&mut t, &outputs, &truth)?);
        }
        Ok([out[0], out[1]])
    };
    let estimates: Vec<[ProfileEstimate; 2]> = threads.install(|| cells.par_iter().map(fit_cell).collect::<Result<_>>())?;

    let mut rows = Vec::new();
    let mut sums = Vec::new();
    for size in &sizes {
        let mut side_p = [None, None];
        for (k, side) in [Side::Positive, Side::Negative].into_iter().enumerate() {
            let of_size = || cells.iter().zip(&estimates).filter(|((s, _, _), _)| s == size).map(|(_, e)| e[k]);
            let (accuracy, _) = mean(of_size().map(|e| e.accuracy));
            let (precision, n) = mean(of_size().map(|e| e.precision));
            let (recall, _) = mean(of_size().map(|e| e.recall));
            side_p[k] = precision;
            rows.push(SweepRow { pool_size: *size, side: side.name(), accuracy, precision, recall, estimates: n });
        }
        sums.push(json!({ "pool_size": size, "precision_sum": side_p[0].zip(side_p[1]).map(|(a, b)| a + b) }));
    }

    prepare_out(&ctx.out)?;
    let path = ctx.path("teacher_sweep.csv");
    write_csv(&path, &["pool_size", "side", "accuracy", "precision", "recall", "estimates"], &rows)?;
    let summary = json!({
        "command": "teacher-sweep",
        "seed": ctx.seed,
        "dataset": train.provenance(),
        "classes": classes,
        "holdout": holdout,
        "output_error": output_error,
        "precision_sums": sums,
    });
    let summary_path = ctx.path("summary.json");
    write_json(&summary_path, &summary)?;
    Ok(Report { files: vec![path, summary_path], summary })
}
