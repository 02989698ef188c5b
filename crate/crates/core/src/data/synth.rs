use std::f64::consts::{PI, SQRT_2};

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, Examples};
use crate::error::{Error, Result};
use crate::features::Image;
use crate::matrix::FeatureMatrix;
use crate::rng::rng_for;

/// Class centres with every pair at distance `separation` when `dim >= n`
/// (scaled simplex corners `separation / sqrt(2) * e_c`). With fewer
/// dimensions the centres sit on a circle (or a line for `dim == 1`) with
/// neighbouring centres at distance `separation`.
pub fn class_means(n_classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    (0..n_classes)
        .map(|c| {
            let mut m = vec![0.0; dim];
            if dim >= n_classes {
                m[c] = separation / SQRT_2;
            } else if dim == 1 {
                m[0] = separation * (c as f64 - (n_classes - 1) as f64 / 2.0);
            } else {
                let step = 2.0 * PI / n_classes as f64;
                let radius = separation / (2.0 * (step / 2.0).sin());
                m[0] = radius * (step * c as f64).cos();
                m[1] = radius * (step * c as f64).sin();
            }
            m
        })
        .collect()
}

/// Unit-variance isotropic Gaussian classes, examples grouped by class.
pub fn synth_gaussians(
    n_classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::OutOfRange("class count, size and dimension must be >= 1".into()));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::OutOfRange(format!("separation must be >= 0, got {separation}")));
    }
    let means = class_means(n_classes, dim, separation);
    let mut rng = rng_for(seed, &[]);
    let mut data = Vec::with_capacity(n_classes * per_class * dim);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            data.extend(mean.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)));
            labels.push(c);
        }
    }
    let m = FeatureMatrix::from_flat(n_classes * per_class, dim, data)?;
    Dataset::new(
        Examples::Vectors(m),
        Some(labels),
        n_classes,
        format!("gaussians:n={n_classes},per={per_class},dim={dim},sep={separation},seed={seed}"),
    )
}

/// Oriented colour gratings: each class has its own orientation, spatial
/// frequency and tint; phase, contrast and pixel noise vary per image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthImageConfig {
    pub n_classes: usize,
    pub per_class: usize,
    pub side: usize,
    pub noise: f64,
    /// Standard deviation of the per-image orientation jitter, radians.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SynthImageConfig {
    fn default() -> Self {
        Self {
            n_classes: 10,
            per_class: 500,
            side: 16,
            noise: 0.1,
            jitter: 0.08,
            seed: 0,
        }
    }
}

fn tint(c: usize, n: usize) -> [f64; 3] {
    let h = 2.0 * PI * c as f64 / n as f64;
    [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|o| 0.5 + 0.5 * (h + o).cos())
}

fn grating(cfg: &SynthImageConfig, class: usize, index: usize) -> Result<Image> {
    let mut rng = rng_for(cfg.seed, &[class as u64, index as u64]);
    let n = cfg.n_classes;
    let theta = PI * class as f64 / n as f64 + cfg.jitter * rng.sample::<f64, _>(StandardNormal);
    let cycles = if class.is_multiple_of(2) { 2.0 } else { 3.5 };
    let k = 2.0 * PI * cycles / cfg.side as f64;
    let phase = rng.gen_range(0.0..2.0 * PI);
    let contrast = rng.gen_range(0.6..1.0);
    let t = tint(class, n);
    let noise = Normal::new(0.0, cfg.noise.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let s = cfg.side;
    let mut px = vec![0f32; 3 * s * s];
    for (ch, tc) in t.iter().enumerate() {
        for y in 0..s {
            for x in 0..s {
                let g = (k * (x as f64 * theta.cos() + y as f64 * theta.sin()) + phase).sin();
                let v = 0.5 + 0.3 * contrast * g * (0.4 + 0.6 * tc) + 0.15 * (tc - 0.5)
                    + noise.sample(&mut rng);
                px[(ch * s + y) * s + x] = v.clamp(0.0, 1.0) as f32;
            }
        }
    }
    Image::new(s, s, 3, px)
}

pub fn synth_images(cfg: &SynthImageConfig) -> Result<Dataset> {
    if cfg.n_classes == 0 || cfg.per_class == 0 || cfg.side == 0 {
        return Err(Error::OutOfRange("class count, size and side must be >= 1".into()));
    }
    let mut images = Vec::with_capacity(cfg.n_classes * cfg.per_class);
    let mut labels = Vec::with_capacity(images.capacity());
    for c in 0..cfg.n_classes {
        for i in 0..cfg.per_class {
            images.push(grating(cfg, c, i)?);
            labels.push(c);
        }
    }
    Dataset::new(
        Examples::Images(images),
        Some(labels),
        cfg.n_classes,
        format!(
            "gratings:n={},per={},side={},noise={},seed={}",
            cfg.n_classes, cfg.per_class, cfg.side, cfg.noise, cfg.seed
        ),
    )
}
