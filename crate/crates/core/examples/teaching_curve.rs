//! One one-vs-rest classifier taught from unlabeled gratings by two synthetic
//! teachers of precision and recall 0.6. Prints the metric trajectory and
//! writes it to `teaching_curve.csv`.
//!
//! `cargo run --release --example teaching_curve -- [class] [chunk]`

use std::sync::Arc;

use bpt::bpt::{bpt_train, evaluate_on, write_history_csv, BptConfig};
use bpt::data::{synth_images, SynthImageConfig, UnlabeledStream};
use bpt::dynamics::TeacherProfile;
use bpt::features::{encode_all, Codebook, CodebookConfig};
use bpt::linear::{Label, LinearModel, Standardizer};
use bpt::rng::rng_for;
use bpt::teachers::{Side, SyntheticTeacher};
use rand::seq::SliceRandom;

fn main() -> bpt::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let class = args.next().unwrap_or(0);
    let chunk = args.next().unwrap_or(500);

    let ds = synth_images(&SynthImageConfig { n_classes: 10, per_class: 500, ..Default::default() })?;
    let imgs = ds.images().expect("image data");
    let book = Codebook::fit(imgs, &CodebookConfig { k: 50, samples: 20_000, ..Default::default() })?;
    let raw = encode_all(imgs, &book)?;
    let x = Standardizer::fit(&raw)?.transform_matrix(&raw)?;

    let mut ids: Vec<usize> = (0..ds.len()).collect();
    ids.shuffle(&mut rng_for(1, &[]));
    let stream = UnlabeledStream::from_ids(&ids, chunk);
    let truth: Arc<Vec<Label>> =
        Arc::new(ds.labels().expect("labels").iter().map(|l| Label::from_bool(*l == class)).collect());

    let profile = TeacherProfile::new(0.6, 0.6)?;
    let mut positive = SyntheticTeacher::new(profile, Side::Positive, truth.clone(), 10)?;
    let mut negative = SyntheticTeacher::new(profile, Side::Negative, truth.clone(), 11)?;
    let mut eval = |m: &LinearModel| evaluate_on(m, &x, &ids, &truth);
    let cfg = BptConfig { chunk_size: chunk, ..BptConfig::default() };
    let out = bpt_train(&x, &stream, &mut positive, &mut negative, &cfg, Some(&mut eval))?;

    println!("{:>4} {:>5} {:>8} {:>9} {:>7} {:>6} {:>6}", "it", "chunk", "accuracy", "precision", "recall", "f1", "|X_R|");
    let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
    for r in &out.state.history {
        println!(
            "{:>4} {:>5} {:>8} {:>9} {:>7} {:>6} {:>6}",
            r.iteration,
            r.chunk,
            show(r.accuracy),
            show(r.precision),
            show(r.recall),
            show(r.f1),
            r.retrain_set
        );
    }
    write_history_csv(&out.state.history, "teaching_curve.csv")?;
    println!("history written to teaching_curve.csv");
    Ok(())
}
