use std::collections::HashSet;

use super::{side_pool, Output, Teacher};
use crate::dynamics::TeacherProfile;
use crate::error::{Error, Result};
use crate::linear::Label;

/// Empirical teacher quality on one set of outputs. `None` marks an
/// undefined ratio (no picks for precision, no true errors for recall).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEstimate {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Agreement between "picked" and "is an error" over the examined pool.
    pub accuracy: Option<f64>,
    pub examined: usize,
    pub errors: usize,
    pub picked: usize,
    pub true_picks: usize,
}

impl ProfileEstimate {
    pub fn profile(&self) -> Option<TeacherProfile> {
        TeacherProfile::new(self.precision?, self.recall?).ok()
    }
}

/// Runs one pick and scores it against `truth[id]`.
pub fn estimate_profile(
    teacher: &mut dyn Teacher,
    outputs: &[Output],
    truth: &[Label],
) -> Result<ProfileEstimate> {
    if outputs.is_empty() {
        return Err(Error::Empty("profile holdout".into()));
    }
    let side = teacher.side();
    let mut errors = HashSet::new();
    let mut examined = 0;
    for o in side_pool(outputs, side) {
        examined += 1;
        let t = truth
            .get(o.id)
            .ok_or_else(|| Error::Teacher(format!("no ground truth for example {}", o.id)))?;
        if *t != o.predicted {
            errors.insert(o.id);
        }
    }
    let picks: HashSet<usize> = teacher.pick(outputs)?.into_iter().collect();
    let true_picks = picks.intersection(&errors).count();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    // correct verdicts: true picks plus unpicked non-errors
    let correct = true_picks + (examined - errors.len() - (picks.len() - true_picks));
    Ok(ProfileEstimate {
        precision: ratio(true_picks, picks.len()),
        recall: ratio(true_picks, errors.len()),
        accuracy: ratio(correct, examined),
        examined,
        errors: errors.len(),
        picked: picks.len(),
        true_picks,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{synth_images, LabeledPool, SynthImageConfig};
    use crate::teachers::{hog_view, teacher_fit, LearnedTeacherConfig, Side, SyntheticTeacher};

    struct Silent;

    impl Teacher for Silent {
        fn side(&self) -> Side {
            Side::Positive
        }
        fn pick(&mut self, _: &[Output]) -> Result<Vec<usize>> {
            Ok(Vec::new())
        }
    }

    fn all_negative(n: usize) -> Vec<Output> {
        (0..n).map(|id| Output { id, predicted: Label::Negative }).collect()
    }

    #[test]
    fn perfect_and_silent_teachers() {
        let truth: Vec<Label> = (0..50).map(|i| Label::from_bool(i % 5 == 0)).collect();
        let profile = TeacherProfile::new(1.0, 1.0).unwrap();
        let mut perfect = SyntheticTeacher::new(profile, Side::Positive, Arc::new(truth.clone()), 0).unwrap();
        let est = estimate_profile(&mut perfect, &all_negative(50), &truth).unwrap();
        assert_eq!((est.precision, est.recall, est.accuracy), (Some(1.0), Some(1.0), Some(1.0)));

        let est = estimate_profile(&mut Silent, &all_negative(50), &truth).unwrap();
        assert_eq!(est.precision, None);
        assert_eq!(est.recall, Some(0.0));
        assert!(est.profile().is_none());
        assert!(estimate_profile(&mut Silent, &[], &truth).is_err());
    }

    #[test]
    fn no_errors_leaves_recall_undefined() {
        let truth = vec![Label::Negative; 10];
        let est = estimate_profile(&mut Silent, &all_negative(10), &truth).unwrap();
        assert_eq!(est.recall, None);
    }

    #[test]
    fn synthetic_estimate_within_three_sigma() {
        // 20000 outputs, 4000 of them false negatives
        let n = 20_000;
        let truth: Vec<Label> = (0..n).map(|i| Label::from_bool(i % 5 == 0)).collect();
        let profile = TeacherProfile::new(0.6, 0.6).unwrap();
        let mut t = SyntheticTeacher::new(profile, Side::Positive, Arc::new(truth.clone()), 11).unwrap();
        let est = estimate_profile(&mut t, &all_negative(n), &truth).unwrap();
        let sigma = (0.6f64 * 0.4 / 4000.0).sqrt();
        assert!((est.recall.unwrap() - 0.6).abs() < 3.0 * sigma);
        assert!((est.precision.unwrap() - 0.6).abs() < 3.0 * sigma);
    }

    #[test]
    fn learned_teacher_on_clean_gratings_is_perfect() {
        let ds = synth_images(&SynthImageConfig {
            n_classes: 2,
            per_class: 80,
            noise: 0.0,
            jitter: 0.0,
            ..Default::default()
        })
        .unwrap();
        let cfg = LearnedTeacherConfig::default();
        let view = Arc::new(hog_view(ds.images().unwrap(), &cfg.hog).unwrap());
        let labels = ds.labels().unwrap();
        let pool = LabeledPool::new((0..ds.len()).collect(), labels.to_vec(), 2).unwrap();
        let truth: Vec<Label> = labels.iter().map(|l| Label::from_bool(*l == 1)).collect();
        let mut t = teacher_fit(view, &pool, 1, Side::Positive, &cfg, 0).unwrap();
        let outputs = all_negative(ds.len());
        let picks = t.pick(&outputs).unwrap();
        let errors: Vec<usize> = (0..ds.len()).filter(|i| truth[*i].is_positive()).collect();
        assert_eq!(picks, errors);
    }
}
