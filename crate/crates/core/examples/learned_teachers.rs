//! Learned teachers (HOG, PCA, logistic regression) fitted on growing
//! labeled pools, scored against a fixed classifier that is wrong 30% of the
//! time.

use std::sync::Arc;

use bpt::data::{split, synth_images, SplitSpec, SynthImageConfig};
use bpt::features::HogConfig;
use bpt::linear::Label;
use bpt::rng::rng_for;
use bpt::teachers::{estimate_profile, hog_view, teacher_fit, LearnedTeacherConfig, Output, Side};
use rand::Rng;

fn main() -> bpt::Result<()> {
    let class = 2;
    let ds = synth_images(&SynthImageConfig { n_classes: 10, per_class: 300, ..Default::default() })?;
    let sp = split(&ds, &SplitSpec { reserved_labeled: 2000, chunk_size: 1000, seed: 4 })?;
    let view = Arc::new(hog_view(ds.images().expect("images"), &HogConfig::default())?);
    let truth: Vec<Label> = ds.labels().expect("labels").iter().map(|l| Label::from_bool(*l == class)).collect();
    let mut rng = rng_for(5, &[]);
    let outputs: Vec<Output> = sp
        .stream
        .ids()
        .map(|id| Output { id, predicted: if rng.gen_bool(0.3) { truth[id].flipped() } else { truth[id] } })
        .collect();

    let fmt = |v: Option<f64>| v.map_or("  -  ".into(), |v| format!("{v:.3}"));
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "pool", "P+", "R+", "P-", "R-");
    for size in [100, 200, 500, 1000, 2000] {
        let cfg = LearnedTeacherConfig { sample_size: size, ..LearnedTeacherConfig::default() };
        let mut row = Vec::new();
        for side in [Side::Positive, Side::Negative] {
            let mut t = teacher_fit(view.clone(), &sp.pool, class, side, &cfg, size as u64)?;
            let e = estimate_profile(&mut t, &outputs, &truth)?;
            row.push(fmt(e.precision));
            row.push(fmt(e.recall));
        }
        println!("{size:>5} {:>8} {:>8} {:>8} {:>8}", row[0], row[1], row[2], row[3]);
    }
    Ok(())
}
