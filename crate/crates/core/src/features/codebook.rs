use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use super::image::Image;
use super::kmeans::kmeans_fit;
use super::patches::{patch_offsets, read_patch};
use super::whiten::zca_matrix;
use crate::codec::{to_u32, Reader, Writer};
use crate::error::{Error, Result};
use crate::matrix::{sq_dist, FeatureMatrix};
use crate::rng::rng_for;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"BPTC";
pub const CODEBOOK_VERSION: u32 = 1;

const STD_FLOOR: f64 = 1e-8;
const ZCA_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookConfig {
    pub patch_size: usize,
    pub stride: usize,
    pub k: usize,
    pub iterations: usize,
    /// Patches sampled across the training images for clustering.
    pub samples: usize,
    pub whiten: bool,
    pub seed: u64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            patch_size: 6,
            stride: 1,
            k: 200,
            iterations: 20,
            samples: 50_000,
            whiten: false,
            seed: 0,
        }
    }
}

/// K-means centroids over standardized (and optionally whitened) patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: FeatureMatrix,
    patch_mean: Vec<f64>,
    patch_std: Vec<f64>,
    whitening: Option<FeatureMatrix>,
    patch_size: usize,
    stride: usize,
    channels: usize,
}

impl Codebook {
    pub fn new(
        centroids: FeatureMatrix,
        patch_mean: Vec<f64>,
        patch_std: Vec<f64>,
        patch_size: usize,
        stride: usize,
        channels: usize,
    ) -> Result<Self> {
        let book = Self {
            centroids,
            patch_mean,
            patch_std,
            whitening: None,
            patch_size,
            stride,
            channels,
        };
        book.validate()?;
        Ok(book)
    }

    fn validate(&self) -> Result<()> {
        let d = self.patch_size * self.patch_size * self.channels;
        if self.patch_size == 0 || self.stride == 0 {
            return Err(Error::OutOfRange("patch size and stride must be positive".into()));
        }
        if self.centroids.rows() < 2 {
            return Err(Error::OutOfRange("codebook needs at least 2 centroids".into()));
        }
        for len in [self.centroids.cols(), self.patch_mean.len(), self.patch_std.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        if let Some(w) = &self.whitening {
            if w.rows() != d || w.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: w.rows() });
            }
        }
        if self.centroids.as_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("centroids must be finite".into()));
        }
        if self.patch_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::OutOfRange("patch_std entries must be > 0".into()));
        }
        Ok(())
    }

    /// Samples patches from `images`, standardizes them and clusters.
    pub fn fit(images: &[Image], cfg: &CodebookConfig) -> Result<Self> {
        let first = images.first().ok_or_else(|| Error::Empty("codebook images".into()))?;
        let (p, channels) = (cfg.patch_size, first.channels());
        if p == 0 || cfg.stride == 0 {
            return Err(Error::OutOfRange("patch size and stride must be positive".into()));
        }
        let d = p * p * channels;
        let mut rng = rng_for(cfg.seed, &[1]);
        let mut data = vec![0.0; cfg.samples * d];
        for out in data.chunks_mut(d) {
            let img = &images[rng.gen_range(0..images.len())];
            if img.channels() != channels {
                return Err(Error::DimensionMismatch { expected: channels, found: img.channels() });
            }
            if p > img.width().min(img.height()) {
                return Err(Error::OutOfRange(format!("patch {p} exceeds image size")));
            }
            let y = rng.gen_range(0..=img.height() - p);
            let x = rng.gen_range(0..=img.width() - p);
            read_patch(img, y, x, p, out);
        }
        let mut patches = FeatureMatrix::from_flat(cfg.samples, d, data)?;
        let n = patches.rows().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in patches.iter_rows() {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
        }
        let mut std = vec![0.0; d];
        for r in patches.iter_rows() {
            for j in 0..d {
                std[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let std: Vec<f64> = std
            .iter()
            .map(|v| if v.sqrt() > STD_FLOOR { v.sqrt() } else { 1.0 })
            .collect();
        for i in 0..patches.rows() {
            for (j, v) in patches.row_mut(i).iter_mut().enumerate() {
                *v = (*v - mean[j]) / std[j];
            }
        }
        let whitening = cfg.whiten.then(|| zca_matrix(&patches, ZCA_EPS));
        if let Some(w) = &whitening {
            let mut buf = vec![0.0; d];
            for i in 0..patches.rows() {
                apply(w, patches.row(i), &mut buf);
                patches.row_mut(i).copy_from_slice(&buf);
            }
        }
        let clusters = kmeans_fit(&patches, cfg.k, cfg.iterations, cfg.seed)?;
        let book = Self {
            centroids: clusters.centroids,
            patch_mean: mean,
            patch_std: std,
            whitening,
            patch_size: p,
            stride: cfg.stride,
            channels,
        };
        book.validate()?;
        Ok(book)
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn centroids(&self) -> &FeatureMatrix {
        &self.centroids
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_whitened(&self) -> bool {
        self.whitening.is_some()
    }

    pub fn output_dim(&self) -> usize {
        4 * self.k()
    }

    /// Triangle activations of one prepared patch.
    fn activate(&self, patch: &mut [f64], scratch: &mut [f64], out: &mut [f64]) {
        for (j, v) in patch.iter_mut().enumerate() {
            *v = (*v - self.patch_mean[j]) / self.patch_std[j];
        }
        let x: &[f64] = match &self.whitening {
            Some(w) => {
                apply(w, patch, scratch);
                scratch
            }
            None => patch,
        };
        for (o, c) in out.iter_mut().zip(self.centroids.iter_rows()) {
            *o = sq_dist(x, c).sqrt();
        }
        let mu = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|z| *z = (mu - *z).max(0.0));
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(CODEBOOK_MAGIC, CODEBOOK_VERSION);
        for v in [
            self.k(),
            self.centroids.cols(),
            self.patch_size,
            self.stride,
            self.channels,
            usize::from(self.whitening.is_some()),
        ] {
            w.u32(to_u32(v)?);
        }
        w.f64s(self.centroids.as_flat());
        w.f64s(&self.patch_mean);
        w.f64s(&self.patch_std);
        if let Some(m) = &self.whitening {
            w.f64s(m.as_flat());
        }
        Ok(w.finish())
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (mut r, version) = Reader::open(buf, CODEBOOK_MAGIC, "codebook")?;
        if version != CODEBOOK_VERSION {
            return Err(Error::Format(format!("unsupported codebook version {version}")));
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let [k, d, patch_size, stride, channels, whitened] = dims;
        let centroids = FeatureMatrix::from_flat(k, d, r.f64s(k * d)?)?;
        let patch_mean = r.f64s(d)?;
        let patch_std = r.f64s(d)?;
        let whitening = match whitened {
            0 => None,
            1 => Some(FeatureMatrix::from_flat(d, d, r.f64s(d * d)?)?),
            other => return Err(Error::Format(format!("bad whitening flag {other}"))),
        };
        r.finish()?;
        let book = Self {
            centroids,
            patch_mean,
            patch_std,
            whitening,
            patch_size,
            stride,
            channels,
        };
        book.validate().map_err(|e| Error::Format(format!("codebook: {e}")))?;
        Ok(book)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn apply(w: &FeatureMatrix, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(w.iter_rows()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Which pooling quadrant a patch at `offset` belongs to along one axis:
/// `Some(0)` before the centre, `Some(1)` after, `None` when it straddles it exactly.
fn half(offset: usize, patch: usize, side: usize) -> Option<usize> {
    match (2 * offset + patch).cmp(&side) {
        std::cmp::Ordering::Less => Some(0),
        std::cmp::Ordering::Greater => Some(1),
        std::cmp::Ordering::Equal => None,
    }
}

/// Triangle-encodes every patch and sum-pools the activations by quadrant.
/// Output blocks are ordered top-left, top-right, bottom-left, bottom-right.
pub fn encode(img: &Image, book: &Codebook) -> Result<Vec<f64>> {
    if img.channels() != book.channels {
        return Err(Error::DimensionMismatch {
            expected: book.channels,
            found: img.channels(),
        });
    }
    let p = book.patch_size;
    if p > img.width().min(img.height()) {
        return Err(Error::OutOfRange(format!(
            "codebook patch {p} exceeds image {}x{}",
            img.width(),
            img.height()
        )));
    }
    let k = book.k();
    let d = p * p * book.channels;
    let mut pooled = vec![0.0; 4 * k];
    let (mut patch, mut scratch, mut act) = (vec![0.0; d], vec![0.0; d], vec![0.0; k]);
    for y in patch_offsets(img.height(), p, book.stride) {
        let Some(qy) = half(y, p, img.height()) else { continue };
        for x in patch_offsets(img.width(), p, book.stride) {
            let Some(qx) = half(x, p, img.width()) else { continue };
            read_patch(img, y, x, p, &mut patch);
            book.activate(&mut patch, &mut scratch, &mut act);
            let q = 2 * qy + qx;
            for (o, a) in pooled[q * k..(q + 1) * k].iter_mut().zip(&act) {
                *o += a;
            }
        }
    }
    Ok(pooled)
}

/// Encodes a batch in parallel; row `i` is `encode(&images[i], book)`.
pub fn encode_all(images: &[Image], book: &Codebook) -> Result<FeatureMatrix> {
    let rows = images
        .par_iter()
        .map(|img| encode(img, book))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(FeatureMatrix::new(book.output_dim()));
    }
    FeatureMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn noise_image(w: usize, c: usize, seed: u64) -> Image {
        let mut rng = rng_for(seed, &[]);
        let n = Normal::new(0.5f32, 0.2).unwrap();
        Image::new(w, w, c, (0..w * w * c).map(|_| n.sample(&mut rng)).collect()).unwrap()
    }

    fn random_book(p: usize, stride: usize, c: usize, k: usize) -> Codebook {
        let d = p * p * c;
        let mut rng = rng_for(77, &[]);
        let n = Normal::new(0.0, 1.0).unwrap();
        let cents = FeatureMatrix::from_flat(k, d, (0..k * d).map(|_| n.sample(&mut rng)).collect())
            .unwrap();
        Codebook::new(cents, vec![0.0; d], vec![1.0; d], p, stride, c).unwrap()
    }

    #[test]
    fn output_length_is_four_k() {
        let book = random_book(5, 1, 3, 7);
        for w in [5, 8, 16, 21] {
            assert_eq!(encode(&noise_image(w, 3, w as u64), &book).unwrap().len(), 28);
        }
    }

    #[test]
    fn tiled_centroid_wins_every_quadrant() {
        // every aligned patch of a channel-constant image normalizes to the same vector
        let (p, c) = (4, 3);
        let img = {
            let mut px = Vec::new();
            for v in [0.9f32, 0.1, 0.4] {
                px.extend(std::iter::repeat_n(v, 16 * 16));
            }
            Image::new(16, 16, c, px).unwrap()
        };
        let mut target = vec![0.0; p * p * c];
        read_patch(&img, 0, 0, p, &mut target);
        let mut book = random_book(p, p, c, 6);
        let winner = 3;
        book.centroids.row_mut(winner).copy_from_slice(&target);
        let f = encode(&img, &book).unwrap();
        for q in 0..4 {
            let block = &f[q * 6..(q + 1) * 6];
            let arg = (0..6).max_by(|a, b| block[*a].total_cmp(&block[*b])).unwrap();
            assert_eq!(arg, winner);
        }
    }

    #[test]
    fn constant_image_has_identical_quadrants() {
        let book = random_book(5, 1, 1, 5);
        for side in [12, 13, 16] {
            let f = encode(&Image::filled(side, side, 1, 0.3).unwrap(), &book).unwrap();
            for q in 1..4 {
                assert_eq!(&f[..5], &f[q * 5..(q + 1) * 5]);
            }
        }
    }

    #[test]
    fn shift_inside_one_quadrant_is_local() {
        let (p, side) = (4, 16);
        let book = random_book(p, 1, 1, 8);
        let base = noise_image(side, 1, 1);
        let mut a = base.clone();
        let mut b = base.clone();
        // patches reaching pixel row/col 5 all sit in the top-left half
        for y in 1..=3 {
            for x in 1..=3 {
                a.set(0, y, x, 1.0);
                b.set(0, y + 1, x + 1, 1.0);
            }
        }
        let (fa, fb) = (encode(&a, &book).unwrap(), encode(&b, &book).unwrap());
        assert_ne!(&fa[..8], &fb[..8]);
        assert_eq!(&fa[8..], &fb[8..]);

        // brute recomputation of the top-right block
        let mut brute = vec![0.0; 8];
        let (mut patch, mut scratch, mut act) = (vec![0.0; 16], vec![0.0; 16], vec![0.0; 8]);
        for y in 0..=side - p {
            for x in 0..=side - p {
                if 2 * y + p < side && 2 * x + p > side {
                    read_patch(&b, y, x, p, &mut patch);
                    book.activate(&mut patch, &mut scratch, &mut act);
                    brute.iter_mut().zip(&act).for_each(|(s, v)| *s += v);
                }
            }
        }
        for (x, y) in brute.iter().zip(&fb[8..16]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_mismatch_rejected() {
        let book = random_book(3, 1, 3, 4);
        assert!(encode(&noise_image(8, 1, 0), &book).is_err());
    }

    #[test]
    fn fit_and_round_trip() {
        let imgs: Vec<Image> = (0..6).map(|s| noise_image(10, 3, s)).collect();
        for whiten in [false, true] {
            let cfg = CodebookConfig {
                patch_size: 3,
                k: 5,
                iterations: 5,
                samples: 300,
                whiten,
                seed: 4,
                ..Default::default()
            };
            let book = Codebook::fit(&imgs, &cfg).unwrap();
            assert_eq!(book.is_whitened(), whiten);
            let again = Codebook::fit(&imgs, &cfg).unwrap();
            assert_eq!(book, again);
            let back = Codebook::from_bytes(&book.to_bytes().unwrap()).unwrap();
            assert_eq!(back, book);
            assert_eq!(encode(&imgs[0], &back).unwrap(), encode(&imgs[0], &book).unwrap());
        }
    }

    #[test]
    fn corrupt_bytes_rejected() {
        let bytes = random_book(3, 1, 1, 3).to_bytes().unwrap();
        assert!(Codebook::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Codebook::from_bytes(&bad).is_err());
    }
}
