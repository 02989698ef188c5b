//! Supervised primitives retrained inside the teaching loop: linear SVM and
//! logistic regression by SGD, PCA, feature standardization and metrics.

mod metrics;
mod model;
mod pca;
mod scale;
mod sgd;

pub use metrics::{compute_metrics, f1_score, ConfusionMatrix, MetricsRecord};
pub use model::{Label, LabeledExample, LinearModel, Sample, MODEL_MAGIC, MODEL_VERSION};
pub use pca::{pca_fit, PcaModel};
pub use scale::Standardizer;
pub use sgd::{
    fit_linear, gradient, objective, sigmoid, train_logistic, train_svm, Loss, TrainConfig,
};
