//! Patch codebook features for base classifiers and HOG descriptors for teachers.

mod codebook;
mod hog;
mod image;
mod kmeans;
mod patches;
mod whiten;

pub use codebook::{encode, encode_all, Codebook, CodebookConfig, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use hog::{hog, HogConfig};
pub use image::Image;
pub use kmeans::{kmeans_fit, nearest, Clustering};
pub use patches::{extract_patches, patch_offsets};
