pub mod dynamics;
pub mod bpt;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod harness;
pub mod linear;
pub mod matrix;
pub mod rng;
pub mod teachers;

mod codec;

pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
