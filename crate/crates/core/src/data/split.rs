use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub reserved_labeled: usize,
    pub chunk_size: usize,
    pub seed: u64,
}

/// Labeled examples kept back for fitting teachers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    ids: Vec<usize>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledPool {
    pub fn new(ids: Vec<usize>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: ids.len(), found: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|l| **l >= n_classes) {
            return Err(Error::OutOfRange(format!("label {bad} >= n_classes {n_classes}")));
        }
        Ok(Self { ids, labels, n_classes })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ids.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for l in &self.labels {
            counts[*l] += 1;
        }
        counts
    }

    /// The sub-pool whose labels are in `classes`.
    pub fn restrict(&self, classes: &[usize]) -> Self {
        let (ids, labels) = self.iter().filter(|(_, l)| classes.contains(l)).unzip();
        Self { ids, labels, n_classes: self.n_classes }
    }
}

/// Example ids in chunks, with no labels attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnlabeledStream {
    chunks: Vec<Vec<usize>>,
}

impl UnlabeledStream {
    pub fn new(chunks: Vec<Vec<usize>>) -> Self {
        Self { chunks: chunks.into_iter().filter(|c| !c.is_empty()).collect() }
    }

    pub fn from_ids(ids: &[usize], chunk_size: usize) -> Self {
        Self::new(ids.chunks(chunk_size.max(1)).map(<[usize]>::to_vec).collect())
    }

    pub fn chunks(&self) -> &[Vec<usize>] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.chunks.iter().flatten().copied()
    }
}

/// True classes of the stream, kept apart from it for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamLabels {
    pub ids: Vec<usize>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub pool: LabeledPool,
    pub stream: UnlabeledStream,
    pub stream_labels: StreamLabels,
}

/// Stratified reservation: class quotas differ by at most one. The rest is
/// shuffled and chunked in order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let labels = ds
        .labels()
        .ok_or_else(|| Error::InvalidConfig("split needs a labeled dataset".into()))?;
    if spec.chunk_size == 0 {
        return Err(Error::InvalidConfig("chunk_size must be >= 1".into()));
    }
    if spec.reserved_labeled > ds.len() {
        return Err(Error::OutOfRange(format!(
            "cannot reserve {} of {} examples",
            spec.reserved_labeled,
            ds.len()
        )));
    }
    let n = ds.n_classes();
    let mut rng = rng_for(spec.seed, &[0]);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, l) in labels.iter().enumerate() {
        by_class[*l].push(id);
    }
    for ids in &mut by_class {
        ids.shuffle(&mut rng);
    }
    let mut quota = vec![spec.reserved_labeled / n; n];
    let mut extra: Vec<usize> = (0..n).collect();
    extra.shuffle(&mut rng);
    for c in extra.into_iter().take(spec.reserved_labeled % n) {
        quota[c] += 1;
    }
    for (c, q) in quota.iter().enumerate() {
        if *q > by_class[c].len() {
            return Err(Error::OutOfRange(format!(
                "class {c} has {} examples, reservation needs {q}",
                by_class[c].len()
            )));
        }
    }
    let mut reserved = vec![false; ds.len()];
    let (mut pool_ids, mut pool_labels) = (Vec::new(), Vec::new());
    for (c, q) in quota.iter().enumerate() {
        for &id in &by_class[c][..*q] {
            reserved[id] = true;
            pool_ids.push(id);
            pool_labels.push(c);
        }
    }
    let mut rest: Vec<usize> = (0..ds.len()).filter(|i| !reserved[*i]).collect();
    rest.shuffle(&mut rng_for(spec.seed, &[1]));
    let stream_labels = StreamLabels {
        labels: rest.iter().map(|i| labels[*i]).collect(),
        ids: rest.clone(),
    };
    Ok(Split {
        pool: LabeledPool::new(pool_ids, pool_labels, n)?,
        stream: UnlabeledStream::from_ids(&rest, spec.chunk_size),
        stream_labels,
    })
}
