use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{dot, FeatureMatrix};
use crate::rng::rng_for;

const POWER_MAX_ITERATIONS: usize = 5_000;
const POWER_TOLERANCE: f64 = 1e-13;

/// Top principal directions of a dataset, rows orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Variance captured by each component (population convention).
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let p = dot(v, b);
        v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Principal components by power iteration with deflation on the covariance.
pub fn pca_fit(data: &FeatureMatrix, k: usize, seed: u64) -> Result<PcaModel> {
    let (n, d) = (data.rows(), data.cols());
    if n == 0 {
        return Err(Error::Empty("PCA data".into()));
    }
    if k == 0 || k > d || k > n {
        return Err(Error::OutOfRange(format!(
            "PCA rank {k} must be in 1..=min(dim {d}, count {n})"
        )));
    }
    let mut mean = vec![0.0; d];
    for row in data.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in data.iter_rows() {
        centered.iter_mut().zip(row.iter().zip(&mean)).for_each(|(c, (x, m))| *c = x - m);
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let out = &mut cov[i * d..(i + 1) * d];
            for (o, cj) in out[i..].iter_mut().zip(&centered[i..]) {
                *o += ci * cj;
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let negligible = 1e-14 * trace.max(f64::MIN_POSITIVE);

    let mut rng = rng_for(seed, &[]);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    let mut w = vec![0.0; d];
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthogonalize(&mut v, &components);
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERATIONS {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi = dot(&cov[i * d..(i + 1) * d], &v);
            }
            orthogonalize(&mut w, &components);
            lambda = dot(&v, &w);
            if normalize(&mut w) <= negligible {
                // Remaining spectrum is numerically zero; any orthonormal
                // completion is a valid set of directions.
                lambda = lambda.max(0.0);
                break;
            }
            let agreement = dot(&v, &w).abs();
            std::mem::swap(&mut v, &mut w);
            if 1.0 - agreement < POWER_TOLERANCE {
                break;
            }
        }
        // Re-orthogonalize against rounding drift before deflating.
        orthogonalize(&mut v, &components);
        normalize(&mut v);
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        variances.push(lambda);
        components.push(v);
    }
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = rng_for(seed, &[]);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|j| rng.gen_range(-1.0..1.0) * (j + 1) as f64).collect())
            .collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    fn total_variance(data: &FeatureMatrix) -> f64 {
        let n = data.rows() as f64;
        (0..data.cols())
            .map(|j| {
                let m = data.iter_rows().map(|r| r[j]).sum::<f64>() / n;
                data.iter_rows().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
            })
            .sum()
    }

    #[test]
    fn components_are_orthonormal() {
        let data = random_matrix(60, 8, 1);
        let m = pca_fit(&data, 8, 0).unwrap();
        for (i, a) in m.components().iter().enumerate() {
            for (j, b) in m.components().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot(a, b), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn line_in_three_d() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.37 - 4.0;
                vec![1.0 + 2.0 * t, -t, 0.5 * t]
            })
            .collect();
        let data = FeatureMatrix::from_rows(&rows).unwrap();
        let m = pca_fit(&data, 1, 3).unwrap();
        let residual = total_variance(&data) - m.variances()[0];
        assert!(residual.abs() < 1e-9, "residual {residual}");
    }

    #[test]
    fn full_rank_preserves_total_variance() {
        let data = random_matrix(40, 6, 2);
        let m = pca_fit(&data, 6, 0).unwrap();
        let captured: f64 = m.variances().iter().sum();
        assert_abs_diff_eq!(captured, total_variance(&data), epsilon = 1e-6);
        // projections carry the same variance
        let proj: Vec<Vec<f64>> = data.iter_rows().map(|r| m.transform(r).unwrap()).collect();
        let pm = FeatureMatrix::from_rows(&proj).unwrap();
        assert_abs_diff_eq!(total_variance(&pm), total_variance(&data), epsilon = 1e-6);
    }

    #[test]
    fn captured_variance_matches_dense_eigensolver() {
        let data = random_matrix(50, 10, 5);
        let n = data.rows() as f64;
        let centered = {
            let mut c = DMatrix::from_row_slice(50, 10, data.as_flat());
            for j in 0..10 {
                let m = c.column(j).mean();
                c.column_mut(j).add_scalar_mut(-m);
            }
            c
        };
        let cov = centered.transpose() * &centered / n;
        let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for k in 1..=10 {
            let m = pca_fit(&data, k, 9).unwrap();
            let captured: f64 = m.variances().iter().sum();
            let expected: f64 = eig[..k].iter().sum();
            assert_abs_diff_eq!(captured, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn reconstruction_error_nonincreasing_in_k() {
        let data = random_matrix(30, 5, 8);
        let total = total_variance(&data);
        let mut last = f64::INFINITY;
        for k in 1..=5 {
            let m = pca_fit(&data, k, 1).unwrap();
            let err = total - m.variances().iter().sum::<f64>();
            assert!(err <= last + 1e-9);
            last = err;
        }
    }

    #[test]
    fn projection_norm_bounded_by_centered_norm() {
        let data = random_matrix(30, 7, 4);
        let m = pca_fit(&data, 3, 2).unwrap();
        for row in data.iter_rows() {
            let p = m.transform(row).unwrap();
            let c: Vec<f64> = row.iter().zip(m.mean()).map(|(a, b)| a - b).collect();
            assert!(dot(&p, &p).sqrt() <= dot(&c, &c).sqrt() + 1e-9);
        }
    }

    #[test]
    fn invalid_rank() {
        let data = random_matrix(5, 3, 0);
        assert!(pca_fit(&data, 0, 0).is_err());
        assert!(pca_fit(&data, 4, 0).is_err());
        let tiny = random_matrix(2, 3, 0);
        assert!(pca_fit(&tiny, 3, 0).is_err());
    }
}
