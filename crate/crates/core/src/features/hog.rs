use std::f64::consts::PI;

use super::image::Image;
use crate::error::{Error, Result};

const BLOCK_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HogConfig {
    pub cell_size: usize,
    pub orientations: usize,
    pub block_size: usize,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self {
            cell_size: 8,
            orientations: 9,
            block_size: 2,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 || self.block_size == 0 {
            return Err(Error::InvalidConfig("HOG cell and block sizes must be positive".into()));
        }
        if self.orientations < 2 {
            return Err(Error::InvalidConfig("HOG needs at least 2 orientation bins".into()));
        }
        Ok(())
    }

    /// Cells along each axis after cropping to whole cells.
    fn cells(&self, width: usize, height: usize) -> (usize, usize) {
        (width / self.cell_size, height / self.cell_size)
    }

    /// Descriptor length for a `width x height` image, or an error if no block fits.
    pub fn output_len(&self, width: usize, height: usize) -> Result<usize> {
        self.validate()?;
        let (cx, cy) = self.cells(width, height);
        if cx < self.block_size || cy < self.block_size {
            return Err(Error::OutOfRange(format!(
                "{width}x{height} image holds no {0}x{0} block of {1}px cells",
                self.block_size, self.cell_size
            )));
        }
        let blocks = (cx - self.block_size + 1) * (cy - self.block_size + 1);
        Ok(blocks * self.block_size * self.block_size * self.orientations)
    }
}

/// Cell histograms of unsigned gradient orientation, blocks normalized by
/// `v / sqrt(|v|^2 + eps^2)` and concatenated row-major.
pub fn hog(img: &Image, cfg: &HogConfig) -> Result<Vec<f64>> {
    let len = cfg.output_len(img.width(), img.height())?;
    let (w, h) = (img.width(), img.height());
    let gray = img.grayscale();
    let at = |y: usize, x: usize| gray[y * w + x];
    let (cx, cy) = cfg.cells(w, h);
    let bins = cfg.orientations;
    let bin_width = PI / bins as f64;
    let mut cells = vec![0.0; cx * cy * bins];
    for y in 0..cy * cfg.cell_size {
        for x in 0..cx * cfg.cell_size {
            let gx = at(y, (x + 1).min(w - 1)) - at(y, x.saturating_sub(1));
            let gy = at((y + 1).min(h - 1), x) - at(y.saturating_sub(1), x);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(PI);
            let t = theta / bin_width;
            let lo = t.floor();
            let frac = t - lo;
            let b0 = (lo as usize) % bins;
            let b1 = (b0 + 1) % bins;
            let cell = (y / cfg.cell_size) * cx + x / cfg.cell_size;
            cells[cell * bins + b0] += mag * (1.0 - frac);
            cells[cell * bins + b1] += mag * frac;
        }
    }
    let bs = cfg.block_size;
    let mut out = Vec::with_capacity(len);
    let mut block = Vec::with_capacity(bs * bs * bins);
    for by in 0..=cy - bs {
        for bx in 0..=cx - bs {
            block.clear();
            for y in by..by + bs {
                for x in bx..bx + bs {
                    let c = y * cx + x;
                    block.extend_from_slice(&cells[c * bins..(c + 1) * bins]);
                }
            }
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + BLOCK_EPS * BLOCK_EPS).sqrt();
            out.extend(block.iter().map(|v| v / norm));
        }
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}
