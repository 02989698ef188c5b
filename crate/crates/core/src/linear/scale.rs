use crate::codec::{to_u32, Reader, Writer};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const SCALER_MAGIC: &[u8; 4] = b"BPTS";
const STD_FLOOR: f64 = 1e-8;

/// Per-dimension standardization to mean 0 / variance 1, with statistics
/// taken from a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &FeatureMatrix) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("standardizer data".into()));
        }
        let n = data.rows() as f64;
        let d = data.cols();
        let mut mean = vec![0.0; d];
        for row in data.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in data.iter_rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        // Constant dimensions keep scale 1 so they map to exactly 0.
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_in_place(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn transform_matrix(&self, data: &FeatureMatrix) -> Result<FeatureMatrix> {
        if data.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.cols(),
            });
        }
        let mut out = data.clone();
        for i in 0..out.rows() {
            self.transform_in_place(out.row_mut(i));
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(SCALER_MAGIC, 1);
        w.u32(to_u32(self.dim())?);
        w.f64s(&self.mean);
        w.f64s(&self.std);
        Ok(w.finish())
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (mut r, version) = Reader::open(buf, SCALER_MAGIC, "standardizer")?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported standardizer version {version}")));
        }
        let d = r.u32()? as usize;
        let mean = r.f64s(d)?;
        let std = r.f64s(d)?;
        r.finish()?;
        if std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Format("standardizer scale must be > 0".into()));
        }
        Ok(Self { mean, std })
    }
}
