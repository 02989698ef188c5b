//! The supervised building blocks: hinge and logistic SGD, metrics, PCA.

use bpt::data::synth_gaussians;
use bpt::linear::{compute_metrics, pca_fit, train_logistic, train_svm, Label, LabeledExample, TrainConfig};

fn main() -> bpt::Result<()> {
    let ds = synth_gaussians(2, 400, 8, 2.5, 9)?;
    let x = ds.vectors().expect("vectors");
    let truth: Vec<Label> = ds.labels().expect("labels").iter().map(|l| Label::from_bool(*l == 1)).collect();
    let data: Vec<LabeledExample> = truth.iter().enumerate().map(|(i, t)| LabeledExample::new(x.row(i).to_vec(), *t)).collect();
    let cfg = TrainConfig { epochs: 20, ..TrainConfig::default() };

    for (name, model) in [("svm", train_svm(&data, &cfg, None)?), ("logistic", train_logistic(&data, &cfg, None)?)] {
        let predicted = (0..x.rows()).map(|i| model.predict(x.row(i))).collect::<bpt::Result<Vec<_>>>()?;
        let m = compute_metrics(&predicted, &truth)?;
        println!("{name:<9} accuracy {:.3} precision {:.3} recall {:.3} f1 {:.3}", m.accuracy, m.precision, m.recall, m.f1);
    }

    let pca = pca_fit(x, 3, 0)?;
    let total: f64 = pca_fit(x, 8, 0)?.variances().iter().sum();
    let top: Vec<String> = pca.variances().iter().map(|v| format!("{:.1}%", 100.0 * v / total)).collect();
    println!("variance captured by the top three components: {}", top.join(", "));
    Ok(())
}
