//! One-vs-rest models plus pairwise disambiguators, and the resolution of
//! ambiguous vote vectors.

mod container;
mod simulate;
mod train;

pub use container::{Container, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use simulate::{simulate_resolution, ResolutionStats};
pub use train::{
    train_ensemble, EnsembleConfig, EnsembleTraining, LearnedTeachers, SyntheticTeachers, Task,
    TaskReport, TeacherFactory,
};

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dynamics::ensemble_correct_probability;
use crate::error::{Error, Result};
use crate::linear::{Label, LinearModel};
use crate::rng::{rng_for, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    n_classes: usize,
    ovr: Vec<LinearModel>,
    /// `(i, j)` with `i < j`; positive means "class i".
    pairwise: BTreeMap<(usize, usize), LinearModel>,
    seed: u64,
}

impl EnsembleModel {
    pub fn new(
        ovr: Vec<LinearModel>,
        pairwise: BTreeMap<(usize, usize), LinearModel>,
        seed: u64,
    ) -> Result<Self> {
        let n = ovr.len();
        if n < 2 {
            return Err(Error::InvalidConfig(format!("ensemble needs >= 2 classes, got {n}")));
        }
        let dim = ovr[0].dimension();
        for m in ovr.iter().chain(pairwise.values()) {
            if m.dimension() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dimension() });
            }
        }
        if pairwise.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidConfig(format!(
                "{} pairwise models for {n} classes, expected {}",
                pairwise.len(),
                n * (n - 1) / 2
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !pairwise.contains_key(&(i, j)) {
                    return Err(Error::InvalidConfig(format!("pairwise model ({i}, {j}) missing")));
                }
            }
        }
        Ok(Self { n_classes: n, ovr, pairwise, seed })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dimension(&self) -> usize {
        self.ovr[0].dimension()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ovr(&self) -> &[LinearModel] {
        &self.ovr
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&LinearModel> {
        self.pairwise.get(&(i.min(j), i.max(j)))
    }

    pub fn pairwise(&self) -> &BTreeMap<(usize, usize), LinearModel> {
        &self.pairwise
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: x.len() });
        }
        Ok(())
    }

    pub fn to_container(&self) -> Result<Container> {
        let mut c = Container::new();
        let manifest = Manifest { n_classes: self.n_classes, seed: self.seed, dimension: self.dimension() };
        c.insert("manifest", serde_json::to_vec(&manifest)?);
        for (i, m) in self.ovr.iter().enumerate() {
            c.insert(format!("ovr:{i}"), m.to_bytes()?);
        }
        for ((i, j), m) in &self.pairwise {
            c.insert(format!("pair:{i}:{j}"), m.to_bytes()?);
        }
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(c.require("manifest")?)
            .map_err(|e| Error::Format(format!("ensemble manifest: {e}")))?;
        let n = manifest.n_classes;
        let ovr = (0..n)
            .map(|i| LinearModel::from_bytes(c.require(&format!("ovr:{i}"))?))
            .collect::<Result<Vec<_>>>()?;
        let mut pairwise = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                pairwise.insert((i, j), LinearModel::from_bytes(c.require(&format!("pair:{i}:{j}"))?)?);
            }
        }
        let model = Self::new(ovr, pairwise, manifest.seed).map_err(|e| Error::Format(e.to_string()))?;
        if model.dimension() != manifest.dimension {
            return Err(Error::Format("ensemble manifest dimension disagrees with models".into()));
        }
        Ok(model)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n_classes: usize,
    seed: u64,
    dimension: usize,
}

/// Bit `i` is set iff the one-vs-rest model of class `i` fired.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoteVector(Vec<bool>);

impl VoteVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }
}

pub fn vote(model: &EnsembleModel, x: &[f64]) -> Result<VoteVector> {
    model.check_dim(x)?;
    Ok(VoteVector(model.ovr.iter().map(|m| m.score(x) > 0.0).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub class: usize,
    pub evaluations: usize,
    /// No model fired and the class was drawn at random.
    pub random: bool,
}

/// Clears bits pairwise, smallest active pair first, until one remains.
pub fn resolve_traced(model: &EnsembleModel, x: &[f64], y: &VoteVector, rng: &mut Rng) -> Result<Resolution> {
    model.check_dim(x)?;
    if y.len() != model.n_classes {
        return Err(Error::DimensionMismatch { expected: model.n_classes, found: y.len() });
    }
    let mut active: Vec<usize> = y.active().collect();
    if active.is_empty() {
        return Ok(Resolution { class: rng.gen_range(0..model.n_classes), evaluations: 0, random: true });
    }
    let mut evaluations = 0;
    // active stays sorted, so (active[0], active[1]) is the smallest pair
    while active.len() > 1 {
        let (i, j) = (active[0], active[1]);
        let says_i = model.pairwise[&(i, j)].score(x) > 0.0;
        evaluations += 1;
        active.remove(if says_i { 1 } else { 0 });
    }
    Ok(Resolution { class: active[0], evaluations, random: false })
}

pub fn resolve(model: &EnsembleModel, x: &[f64], y: &VoteVector, rng: &mut Rng) -> Result<usize> {
    resolve_traced(model, x, y, rng).map(|r| r.class)
}

/// Vote then resolve. Ties among no votes are broken by a stream keyed on
/// `example_id`, so results do not depend on evaluation order.
pub fn classify(model: &EnsembleModel, x: &[f64], example_id: u64) -> Result<usize> {
    let y = vote(model, x)?;
    resolve(model, x, &y, &mut rng_for(model.seed, &[example_id]))
}

/// Expected accuracy of the whole ensemble from component accuracies.
pub fn predict_ensemble_accuracy(p_accuracy: f64, p_assemble: f64, n: usize) -> Result<f64> {
    ensemble_correct_probability(p_accuracy, p_assemble, n)
}

pub(crate) fn pair_label(i: usize, class: usize) -> Label {
    Label::from_bool(class == i)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Class k fires iff x[k] > 0; pair (i, j) says "class i" iff x[i] >= x[j].
    fn axis_model(n: usize) -> EnsembleModel {
        let unit = |k: usize, s: f64| {
            let mut w = vec![0.0; n];
            w[k] = s;
            w
        };
        let ovr = (0..n).map(|k| LinearModel::new(unit(k, 1.0), 0.0).unwrap()).collect();
        let mut pairwise = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut w = unit(i, 1.0);
                w[j] = -1.0;
                pairwise.insert((i, j), LinearModel::new(w, 1e-9).unwrap());
            }
        }
        EnsembleModel::new(ovr, pairwise, 7).unwrap()
    }

    #[test]
    fn votes() {
        let m = axis_model(4);
        assert_eq!(vote(&m, &[-1.0; 4]).unwrap().sum(), 0);
        let y = vote(&m, &[-1.0, 2.0, -1.0, -1.0]).unwrap();
        assert_eq!(y.bits(), &[false, true, false, false]);
        assert_eq!(vote(&m, &[-1.0, 2.0, -1.0, -1.0]).unwrap(), y);
        assert!(vote(&m, &[1.0]).is_err());
    }

    #[test]
    fn single_vote_needs_no_pairwise() {
        let m = axis_model(4);
        let x = [0.0, 0.0, 3.0, 0.0];
        let y = VoteVector::new(vec![false, false, true, false]);
        let r = resolve_traced(&m, &x, &y, &mut rng_for(0, &[])).unwrap();
        assert_eq!(r, Resolution { class: 2, evaluations: 0, random: false });
    }

    #[test]
    fn first_and_third_active_asks_their_pair() {
        // classes 0 and 2 fire; the (0, 2) model prefers 0
        let m = axis_model(4);
        let x = [2.0, -1.0, 1.0, -1.0];
        let y = vote(&m, &x).unwrap();
        assert_eq!(y.bits(), &[true, false, true, false]);
        let r = resolve_traced(&m, &x, &y, &mut rng_for(0, &[])).unwrap();
        assert_eq!((r.class, r.evaluations), (0, 1));
    }

    #[test]
    fn evaluations_bounded_and_winner_was_active() {
        let m = axis_model(6);
        let mut rng = rng_for(3, &[]);
        for _ in 0..500 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = vote(&m, &x).unwrap();
            let r = resolve_traced(&m, &x, &y, &mut rng).unwrap();
            if y.sum() == 0 {
                assert!(r.random);
            } else {
                assert_eq!(r.evaluations, y.sum() - 1);
                assert!(y.bits()[r.class]);
                // with these pair models the largest active coordinate wins
                let best = y.active().max_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap();
                assert_eq!(r.class, best);
            }
        }
    }

    #[test]
    fn empty_vote_is_seeded_and_uniform() {
        let m = axis_model(5);
        let x = [-1.0; 5];
        assert_eq!(classify(&m, &x, 42).unwrap(), classify(&m, &x, 42).unwrap());
        let draws = 100_000;
        let mut counts = [0f64; 5];
        for id in 0..draws {
            counts[classify(&m, &x, id).unwrap()] += 1.0;
        }
        let expected = draws as f64 / 5.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // chi-square, 4 degrees of freedom, 0.999 quantile
        assert!(chi2 < 18.47, "chi2 {chi2}");
    }

    #[test]
    fn classify_is_vote_then_resolve() {
        let m = axis_model(3);
        let mut rng = rng_for(1, &[]);
        for id in 0..200u64 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = vote(&m, &x).unwrap();
            let r = resolve(&m, &x, &y, &mut rng_for(m.seed(), &[id])).unwrap();
            assert_eq!(classify(&m, &x, id).unwrap(), r);
        }
    }

    #[test]
    fn two_classes_use_one_pair() {
        let m = axis_model(2);
        assert_eq!(m.pairwise().len(), 1);
        let x = [1.0, 2.0];
        assert_eq!(classify(&m, &x, 0).unwrap(), 1);
        assert_eq!(axis_model(10).pairwise().len(), 45);
    }

    #[test]
    fn incomplete_pairwise_rejected() {
        let m = axis_model(3);
        let mut pairs = m.pairwise().clone();
        pairs.remove(&(0, 2));
        assert!(EnsembleModel::new(m.ovr().to_vec(), pairs, 0).is_err());
    }

    #[test]
    fn container_round_trip() {
        let m = axis_model(4);
        let bytes = m.to_container().unwrap().to_bytes().unwrap();
        let back = EnsembleModel::from_container(&Container::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, m);
        let mut c = m.to_container().unwrap();
        c.remove("pair:1:3");
        assert!(matches!(EnsembleModel::from_container(&c), Err(Error::Format(_))));
    }

    #[test]
    fn predicted_accuracy_identities() {
        assert_eq!(predict_ensemble_accuracy(0.9, 1.0, 7).unwrap(), 0.9);
        let p = 0.8;
        assert!((predict_ensemble_accuracy(p, 0.0, 2).unwrap() - p * p).abs() < 1e-15);
    }
}
