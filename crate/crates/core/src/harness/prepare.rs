//! Dataset selection and the shared featurization of images or vectors.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use super::config::KvConfig;
use crate::data::{load_cifar10, load_cifar100, synth_gaussians, synth_images, Dataset, SynthImageConfig};
use crate::ensemble::Container;
use crate::error::{Error, Result};
use crate::features::{encode_all, Codebook, CodebookConfig, HogConfig};
use crate::linear::Standardizer;
use crate::matrix::FeatureMatrix;
use crate::rng::derive_seed;
use crate::teachers::hog_view;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    SynthImages,
    SynthGaussians,
    Cifar10(PathBuf),
    Cifar100(PathBuf),
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "synth-images" => Ok(Source::SynthImages),
            None if s == "synth-gaussians" => Ok(Source::SynthGaussians),
            Some(("cifar10", dir)) if !dir.is_empty() => Ok(Source::Cifar10(dir.into())),
            Some(("cifar100", dir)) if !dir.is_empty() => Ok(Source::Cifar100(dir.into())),
            _ => Err(Error::InvalidConfig(format!(
                "unknown dataset {s:?}; use synth-images, synth-gaussians, cifar10:DIR or cifar100:DIR"
            ))),
        }
    }
}

#[derive(Debug)]
pub struct Loaded {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

/// Where the data comes from plus the synthetic generator settings.
/// Synthetic sets draw from `data_seed` (default: derived from the run seed);
/// the test set is a second draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub source: Source,
    pub classes: usize,
    pub per_class: usize,
    pub test_per_class: usize,
    pub side: usize,
    pub noise: f64,
    pub jitter: f64,
    pub dim: usize,
    pub separation: f64,
    pub data_seed: u64,
}

impl DataSpec {
    pub fn from_config(source: Source, cfg: &KvConfig, seed: u64) -> Result<Self> {
        let img = SynthImageConfig::default();
        Ok(Self {
            source,
            classes: cfg.get("classes", img.n_classes)?,
            per_class: cfg.get("per_class", img.per_class)?,
            test_per_class: cfg.get("test_per_class", 100)?,
            side: cfg.get("side", img.side)?,
            noise: cfg.get("noise", img.noise)?,
            jitter: cfg.get("jitter", img.jitter)?,
            dim: cfg.get("dim", 16)?,
            separation: cfg.get("separation", 4.0)?,
            data_seed: cfg.get("data_seed", derive_seed(seed, &[0xda7a]))?,
        })
    }

    pub fn load(&self) -> Result<Loaded> {
        let s = self;
        let with_test = s.test_per_class > 0;
        match &s.source {
            Source::SynthImages => {
                let base = SynthImageConfig {
                    n_classes: s.classes,
                    per_class: s.per_class,
                    side: s.side,
                    noise: s.noise,
                    jitter: s.jitter,
                    seed: s.data_seed,
                };
                let train = synth_images(&base)?;
                let test = with_test
                    .then(|| synth_images(&SynthImageConfig { per_class: s.test_per_class, seed: s.data_seed ^ 1, ..base }))
                    .transpose()?;
                Ok(Loaded { train, test })
            }
            Source::SynthGaussians => {
                let draw = |per, seed| synth_gaussians(s.classes, per, s.dim, s.separation, seed);
                let train = draw(s.per_class, s.data_seed)?;
                let test = with_test.then(|| draw(s.test_per_class, s.data_seed ^ 1)).transpose()?;
                Ok(Loaded { train, test })
            }
            Source::Cifar10(dir) => {
                let d = load_cifar10(dir)?;
                Ok(Loaded { train: d.train, test: d.test })
            }
            Source::Cifar100(dir) => {
                let d = load_cifar100(dir)?;
                Ok(Loaded { train: d.train, test: d.test })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub codebook: CodebookConfig,
    pub hog: HogConfig,
}

impl FeatureSpec {
    pub fn from_config(cfg: &KvConfig, seed: u64) -> Result<Self> {
        let d = CodebookConfig::default();
        let codebook = CodebookConfig {
            patch_size: cfg.get("patch", 6)?,
            stride: cfg.get("stride", d.stride)?,
            k: cfg.get("codebook_k", 64)?,
            iterations: cfg.get("codebook_iterations", d.iterations)?,
            samples: cfg.get("codebook_samples", 20_000)?,
            whiten: cfg.get("whiten", false)?,
            seed: derive_seed(seed, &[0xc0de]),
        };
        let h = HogConfig::default();
        let hog = HogConfig {
            cell_size: cfg.get("hog_cell", h.cell_size)?,
            orientations: cfg.get("hog_bins", h.orientations)?,
            block_size: cfg.get("hog_block", h.block_size)?,
        };
        hog.validate()?;
        Ok(Self { codebook, hog })
    }
}

/// Codebook encoding (images only) followed by standardization.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub codebook: Option<Codebook>,
    pub scaler: Standardizer,
}

impl Pipeline {
    /// Fits on the unlabeled content of `train` and returns its features too.
    pub fn fit(train: &Dataset, spec: &FeatureSpec) -> Result<(Self, FeatureMatrix)> {
        let (codebook, raw) = match train.images() {
            Some(imgs) => {
                let book = Codebook::fit(imgs, &spec.codebook)?;
                let raw = encode_all(imgs, &book)?;
                (Some(book), raw)
            }
            None => (None, train.vectors().expect("vector dataset").clone()),
        };
        let scaler = Standardizer::fit(&raw)?;
        let x = scaler.transform_matrix(&raw)?;
        Ok((Self { codebook, scaler }, x))
    }

    pub fn transform(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let raw = match (ds.images(), &self.codebook) {
            (Some(imgs), Some(book)) => encode_all(imgs, book)?,
            (None, None) => ds.vectors().expect("vector dataset").clone(),
            _ => {
                return Err(Error::InvalidConfig(
                    "dataset kind does not match the model's feature pipeline".into(),
                ))
            }
        };
        self.scaler.transform_matrix(&raw)
    }

    pub fn store(&self, c: &mut Container) -> Result<()> {
        c.insert("scaler", self.scaler.to_bytes()?);
        if let Some(book) = &self.codebook {
            c.insert("codebook", book.to_bytes()?);
        }
        Ok(())
    }

    pub fn restore(c: &Container) -> Result<Self> {
        Ok(Self {
            codebook: c.get("codebook").map(Codebook::from_bytes).transpose()?,
            scaler: Standardizer::from_bytes(c.require("scaler")?)?,
        })
    }
}

/// What learned teachers look at: HOG of images, or the standardized vectors.
pub fn teacher_view(ds: &Dataset, features: &FeatureMatrix, hog: &HogConfig) -> Result<Arc<FeatureMatrix>> {
    match ds.images() {
        Some(imgs) => Ok(Arc::new(hog_view(imgs, hog)?)),
        None => Ok(Arc::new(features.clone())),
    }
}
