//! Datasets: CIFAR binaries, synthetic generators, splitting and CSV export.

mod cifar;
mod export;
mod split;
mod synth;

pub use cifar::{
    cifar100_record, cifar10_record, load_cifar10, load_cifar100, parse_cifar10, parse_cifar100,
    CifarData, CIFAR100_RECORD, CIFAR10_RECORD, CIFAR_PIXELS, CIFAR_SIDE,
};
pub use export::write_dataset_csv;
pub use split::{split, LabeledPool, Split, SplitSpec, StreamLabels, UnlabeledStream};
pub use synth::{class_means, synth_gaussians, synth_images, SynthImageConfig};

use crate::error::{Error, Result};
use crate::features::Image;
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Examples {
    Images(Vec<Image>),
    Vectors(FeatureMatrix),
}

impl Examples {
    pub fn len(&self) -> usize {
        match self {
            Examples::Images(v) => v.len(),
            Examples::Vectors(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Examples addressed by position (the example id), with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Examples,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    provenance: String,
}

impl Dataset {
    pub fn new(
        examples: Examples,
        labels: Option<Vec<usize>>,
        n_classes: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if let Examples::Images(imgs) = &examples {
            if let Some(first) = imgs.first() {
                let shape = (first.width(), first.height(), first.channels());
                if let Some(bad) = imgs
                    .iter()
                    .find(|i| (i.width(), i.height(), i.channels()) != shape)
                {
                    return Err(Error::DimensionMismatch {
                        expected: shape.0 * shape.1 * shape.2,
                        found: bad.pixels().len(),
                    });
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != examples.len() {
                return Err(Error::DimensionMismatch {
                    expected: examples.len(),
                    found: labels.len(),
                });
            }
            if let Some(bad) = labels.iter().find(|l| **l >= n_classes) {
                return Err(Error::OutOfRange(format!("label {bad} >= n_classes {n_classes}")));
            }
        }
        Ok(Self {
            examples,
            labels,
            n_classes,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &Examples {
        &self.examples
    }

    pub fn images(&self) -> Option<&[Image]> {
        match &self.examples {
            Examples::Images(v) => Some(v),
            Examples::Vectors(_) => None,
        }
    }

    pub fn vectors(&self) -> Option<&FeatureMatrix> {
        match &self.examples {
            Examples::Vectors(m) => Some(m),
            Examples::Images(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for l in self.labels.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }
}
