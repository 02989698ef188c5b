use super::image::Image;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

const VARIANCE_FLOOR: f64 = 1e-8;

/// Top-left offsets visited along one side.
pub fn patch_offsets(side: usize, patch_size: usize, stride: usize) -> Vec<usize> {
    if patch_size > side || stride == 0 {
        return Vec::new();
    }
    (0..=side - patch_size).step_by(stride).collect()
}

/// Copies the patch at `(y, x)` into `out` (channel, row, column order) and
/// normalizes it to zero mean and unit variance.
pub(crate) fn read_patch(img: &Image, y: usize, x: usize, p: usize, out: &mut [f64]) {
    let mut k = 0;
    for c in 0..img.channels() {
        for dy in 0..p {
            for dx in 0..p {
                out[k] = f64::from(img.get(c, y + dy, x + dx));
                k += 1;
            }
        }
    }
    normalize_patch(out);
}

fn normalize_patch(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let scale = var.max(VARIANCE_FLOOR).sqrt();
    v.iter_mut().for_each(|x| *x = (*x - mean) / scale);
}

/// All `patch_size` squares at `stride` offsets, each normalized.
pub fn extract_patches(img: &Image, patch_size: usize, stride: usize) -> Result<FeatureMatrix> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::OutOfRange("patch size and stride must be positive".into()));
    }
    if patch_size > img.width().min(img.height()) {
        return Err(Error::OutOfRange(format!(
            "patch {patch_size} exceeds image {}x{}",
            img.width(),
            img.height()
        )));
    }
    let d = patch_size * patch_size * img.channels();
    let ys = patch_offsets(img.height(), patch_size, stride);
    let xs = patch_offsets(img.width(), patch_size, stride);
    let mut data = vec![0.0; ys.len() * xs.len() * d];
    let mut chunks = data.chunks_mut(d);
    for &y in &ys {
        for &x in &xs {
            read_patch(img, y, x, patch_size, chunks.next().unwrap());
        }
    }
    FeatureMatrix::from_flat(ys.len() * xs.len(), d, data)
}
