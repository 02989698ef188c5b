//! Full multiclass training on gratings: ten one-vs-rest models plus 45
//! pairwise disambiguators, saved to a container and reloaded to classify a
//! fresh draw.

use std::sync::Arc;

use bpt::bpt::BptConfig;
use bpt::data::{split, synth_images, SplitSpec, SynthImageConfig};
use bpt::dynamics::TeacherProfile;
use bpt::ensemble::{classify, train_ensemble, Container, EnsembleConfig, EnsembleModel, SyntheticTeachers};
use bpt::features::{encode_all, Codebook, CodebookConfig};
use bpt::linear::Standardizer;

fn main() -> bpt::Result<()> {
    let n = 10;
    let base = SynthImageConfig { n_classes: n, per_class: 400, ..Default::default() };
    let train = synth_images(&base)?;
    let test = synth_images(&SynthImageConfig { per_class: 50, seed: 99, ..base })?;
    let book = Codebook::fit(train.images().expect("images"), &CodebookConfig { k: 40, samples: 20_000, ..Default::default() })?;
    let scaler = Standardizer::fit(&encode_all(train.images().expect("images"), &book)?)?;
    let featurize = |ds: &bpt::data::Dataset| -> bpt::Result<_> {
        scaler.transform_matrix(&encode_all(ds.images().expect("images"), &book)?)
    };
    let x = featurize(&train)?;

    let sp = split(&train, &SplitSpec { reserved_labeled: 10 * n, chunk_size: 500, seed: 3 })?;
    let labels = Arc::new(train.labels().expect("labels").to_vec());
    let profile = TeacherProfile::new(0.6, 0.6)?;
    let teachers = SyntheticTeachers { positive: profile, negative: profile, labels: labels.clone() };
    let cfg = EnsembleConfig { bpt: BptConfig { chunk_size: 500, ..BptConfig::default() }, ..EnsembleConfig::default() };
    let out = train_ensemble(&x, &sp.stream, &sp.pool, n, &teachers, &cfg, Some(&labels))?;

    for r in out.ovr_reports() {
        let f1 = r.final_metrics.as_ref().map_or(f64::NAN, |m| m.f1);
        println!("{:<6} {:>4} iterations  stream F1 {f1:.3}", r.task.to_string(), r.history.len());
    }
    println!("pairs trained from the labeled pool instead: {}", out.fallbacks().count());

    let path = std::env::temp_dir().join("bpt_example_ensemble.bpte");
    out.model.to_container()?.save(&path)?;
    let model = EnsembleModel::from_container(&Container::load(&path)?)?;
    let xt = featurize(&test)?;
    let truth = test.labels().expect("labels");
    let mut correct = 0;
    for (id, t) in truth.iter().enumerate() {
        if classify(&model, xt.row(id), id as u64)? == *t {
            correct += 1;
        }
    }
    println!("reloaded from {}: test accuracy {:.3}", path.display(), correct as f64 / truth.len() as f64);
    Ok(())
}
