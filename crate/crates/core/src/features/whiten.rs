use crate::matrix::FeatureMatrix;

const JACOBI_SWEEPS: usize = 100;

/// Cyclic Jacobi rotation for a symmetric matrix stored row-major.
/// Returns eigenvalues and the eigenvectors as columns of a row-major `n x n` buffer.
pub(crate) fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// ZCA transform `U diag(1/sqrt(lambda + eps)) U^T` of already centred rows.
pub(crate) fn zca_matrix(rows: &FeatureMatrix, eps: f64) -> FeatureMatrix {
    let d = rows.cols();
    let n = rows.rows().max(1) as f64;
    let mut cov = vec![0.0; d * d];
    for r in rows.iter_rows() {
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += r[i] * r[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= n;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let (vals, vecs) = symmetric_eigen(cov, d);
    let mut w = vec![0.0; d * d];
    for (k, l) in vals.iter().enumerate() {
        let s = 1.0 / (l.max(0.0) + eps).sqrt();
        for i in 0..d {
            for j in 0..d {
                w[i * d + j] += vecs[i * d + k] * s * vecs[j * d + k];
            }
        }
    }
    FeatureMatrix::from_flat(d, d, w).expect("square buffer")
}
