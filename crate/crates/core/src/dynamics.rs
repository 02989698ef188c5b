//! Error-propagation analysis for teacher-guided retraining.
//!
//! The mistakes a classifier makes evolve linearly under a pair (or family) of
//! error-picking teachers: `e(k+1) = M e(k)`, where `M` is built from the
//! teachers' precision and recall. The errors vanish iff the spectral radius
//! of `M` is below one. This module builds those matrices, computes their
//! spectral radius, and evaluates the accuracy model of the pairwise
//! disambiguation ensemble.

use crate::error::{check_probability, Error, Result};

/// Relative tolerance of [`spectral_radius`].
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;
/// Iteration cap of [`spectral_radius`].
pub const SPECTRAL_MAX_ITERATIONS: usize = 100_000;
/// A radius within this distance of one counts as the boundary, which is
/// reported as non-convergent.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

const MIX_TOLERANCE: f64 = 1e-9;
// Shifting by the identity makes the Perron root strictly dominant, so the
// iteration also settles on matrices with eigenvalues at -rho.
const POWER_SHIFT: f64 = 1.0;

/// Precision and recall of an error-picking expert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeacherProfile {
    precision: f64,
    recall: f64,
}

impl TeacherProfile {
    pub fn new(precision: f64, recall: f64) -> Result<Self> {
        Ok(Self {
            precision: check_probability("precision", precision)?,
            recall: check_probability("recall", recall)?,
        })
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn recall(&self) -> f64 {
        self.recall
    }

    /// `(1 - P) / P * R`: the rate at which correct outputs are wrongly "fixed".
    fn contamination(&self) -> Result<f64> {
        if self.precision <= 0.0 {
            return Err(Error::DegenerateTeacher {
                precision: self.precision,
            });
        }
        Ok((1.0 - self.precision) / self.precision * self.recall)
    }
}

/// Per-class error counts (or rates). For two classes this is
/// `(false positives, false negatives)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState(Vec<f64>);

impl ErrorState {
    pub fn new(errors: Vec<f64>) -> Result<Self> {
        if errors.len() < 2 {
            return Err(Error::OutOfRange(format!(
                "error state needs at least 2 entries, got {}",
                errors.len()
            )));
        }
        if let Some(bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::OutOfRange(format!("error entry {bad} is negative")));
        }
        Ok(Self(errors))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Square matrix driving the error recursion, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("non-finite matrix entry".into()));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Column-normalized confusion proportions: `a[i][j]` is the share of the
/// examples wrongly assigned to class `j` whose true class is `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMix {
    n: usize,
    a: Vec<f64>,
}

impl ConfusionMix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidMix(format!("need at least 2 classes, got {n}")));
        }
        let mut a = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMix(format!("row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j && v != 0.0 {
                    return Err(Error::InvalidMix(format!("diagonal entry {i} is {v}")));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidMix(format!("entry ({i},{j}) = {v}")));
                }
            }
            a.extend_from_slice(row);
        }
        for j in 0..n {
            let col: f64 = (0..n).filter(|&i| i != j).map(|i| a[i * n + j]).sum();
            if (col - 1.0).abs() > MIX_TOLERANCE {
                return Err(Error::InvalidMix(format!("column {j} sums to {col}")));
            }
        }
        Ok(Self { n, a })
    }

    /// Every wrong assignment is equally likely to come from any other class.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMix(format!("need at least 2 classes, got {n}")));
        }
        let off = 1.0 / (n - 1) as f64;
        let a = (0..n * n)
            .map(|idx| if idx / n == idx % n { 0.0 } else { off })
            .collect();
        Ok(Self { n, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }
}

/// The 2x2 matrix of the binary recursion; `positive` picks false negatives
/// and `negative` picks false positives.
pub fn build_binary_matrix(
    positive: TeacherProfile,
    negative: TeacherProfile,
) -> Result<TransitionMatrix> {
    let cp = positive.contamination()?;
    let cn = negative.contamination()?;
    TransitionMatrix::new(
        2,
        vec![1.0 - negative.recall, cp, cn, 1.0 - positive.recall],
    )
}

/// Entry `(I, I)` is `1 - sum_{i != I} R_i a[i][I]`, entry `(I, j)` is
/// `(1 - P_I) / P_I * R_I`. Entries are constants.
pub fn build_multiclass_matrix(
    profiles: &[TeacherProfile],
    mix: &ConfusionMix,
) -> Result<TransitionMatrix> {
    let n = mix.n();
    if profiles.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: profiles.len(),
        });
    }
    let contamination = profiles
        .iter()
        .map(TeacherProfile::contamination)
        .collect::<Result<Vec<_>>>()?;
    let mut entries = vec![0.0; n * n];
    for big in 0..n {
        for j in 0..n {
            entries[big * n + j] = if big == j {
                // Mathematically >= 0 since the column of the mix sums to 1;
                // the clamp removes rounding residue like -2e-16.
                (1.0 - (0..n)
                    .filter(|&i| i != big)
                    .map(|i| profiles[i].recall * mix.get(i, big))
                    .sum::<f64>())
                .max(0.0)
            } else {
                contamination[big]
            };
        }
    }
    TransitionMatrix::new(n, entries)
}

/// Closed-form spectrum for identical teachers and a uniform mix:
/// `n - 1` copies of `(p - r) / p`, then `(p + (n - 1) r - n p r) / p`.
pub fn symmetric_eigenvalues(p: f64, r: f64, n: usize) -> Result<Vec<f64>> {
    check_probability("precision", p)?;
    check_probability("recall", r)?;
    if p <= 0.0 {
        return Err(Error::DegenerateTeacher { precision: p });
    }
    if n < 2 {
        return Err(Error::OutOfRange(format!("class count {n} < 2")));
    }
    let nf = n as f64;
    let mut out = vec![(p - r) / p; n - 1];
    out.push((p + (nf - 1.0) * r - nf * p * r) / p);
    Ok(out)
}

/// Largest |eigenvalue| of a nonnegative matrix, i.e. its Perron root.
///
/// Shifted power iteration from the all-ones vector. Stops when the
/// Collatz-Wielandt bracket `[min (Ax)_i/x_i, max (Ax)_i/x_i]` closes to
/// [`SPECTRAL_TOLERANCE`] relative width, or when a geometric extrapolation of
/// the remaining change in the estimate falls below that tolerance (the
/// bracket can stay open on reducible matrices).
pub fn spectral_radius(m: &TransitionMatrix) -> Result<f64> {
    if m.entries.iter().any(|v| *v < 0.0) {
        return Err(Error::OutOfRange(
            "spectral_radius requires a nonnegative matrix".into(),
        ));
    }
    if m.entries.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut x = vec![1.0; m.n];
    let mut prev_estimate: Option<f64> = None;
    let mut prev_delta: Option<f64> = None;
    let mut estimate = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERATIONS {
        let y: Vec<f64> = m
            .apply(&x)
            .into_iter()
            .zip(&x)
            .map(|(mx, xi)| mx + POWER_SHIFT * xi)
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (yi, xi) in y.iter().zip(&x) {
            if *xi > f64::MIN_POSITIVE {
                let ratio = yi / xi;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        if hi - lo <= SPECTRAL_TOLERANCE * hi {
            return Ok((0.5 * (lo + hi) - POWER_SHIFT).max(0.0));
        }
        // x is normalized to unit sup-norm, so max(y) estimates rho + shift.
        let nu = y.iter().fold(0.0_f64, |a, b| a.max(*b));
        estimate = nu - POWER_SHIFT;
        if let Some(prev) = prev_estimate {
            let delta = (nu - prev).abs();
            if delta == 0.0 {
                return Ok(estimate.max(0.0));
            }
            if let Some(pd) = prev_delta.filter(|pd| *pd > 0.0) {
                let q = (delta / pd).min(0.999_999);
                if delta * q / (1.0 - q) <= SPECTRAL_TOLERANCE * nu {
                    return Ok(estimate.max(0.0));
                }
            }
            prev_delta = Some(delta);
        }
        prev_estimate = Some(nu);
        x = y.into_iter().map(|v| v / nu).collect();
    }
    Err(Error::NotConverged {
        iterations: SPECTRAL_MAX_ITERATIONS,
        last_estimate: estimate,
    })
}

/// `true` iff `rho` is strictly inside the unit disc, with the boundary band
/// counted as non-convergent.
pub fn converges(rho: f64) -> bool {
    rho < 1.0 - BOUNDARY_MARGIN
}

/// Trajectory `[e(0), ..., e(steps)]` of `e(k+1) = M e(k)`.
pub fn iterate_errors(
    m: &TransitionMatrix,
    e0: &ErrorState,
    steps: usize,
) -> Result<Vec<ErrorState>> {
    if e0.len() != m.n {
        return Err(Error::DimensionMismatch {
            expected: m.n,
            found: e0.len(),
        });
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(e0.clone());
    for k in 0..steps {
        let next = m.apply(out[k].as_slice());
        out.push(ErrorState(next));
    }
    Ok(out)
}

/// Both teachers find something (`R+ R- != 0`) and their precisions sum
/// above one.
pub fn check_bpt_condition(positive: TeacherProfile, negative: TeacherProfile) -> bool {
    positive.recall * negative.recall != 0.0 && positive.precision + negative.precision > 1.0
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Probability that the true class's one-vs-rest model fires while exactly
/// `k` of the other `n - 1` also fire: `C(n-1, k) p^(n-k) (1-p)^k`.
pub fn ensemble_misroute_probability(p_accuracy: f64, n: usize, k: usize) -> Result<f64> {
    check_probability("p_accuracy", p_accuracy)?;
    if n < 2 {
        return Err(Error::OutOfRange(format!("class count {n} < 2")));
    }
    if k > n - 1 {
        return Err(Error::OutOfRange(format!("k = {k} exceeds n - 1 = {}", n - 1)));
    }
    let coeff = ln_choose(n - 1, k).exp();
    Ok(coeff * p_accuracy.powi((n - k) as i32) * (1.0 - p_accuracy).powi(k as i32))
}

/// `sum_{K=0}^{n-1} p_K p_assemble^K`.
pub fn ensemble_correct_probability(p_accuracy: f64, p_assemble: f64, n: usize) -> Result<f64> {
    check_probability("p_assemble", p_assemble)?;
    if p_assemble == 1.0 {
        // the p_K sum to p; skip the round-off of summing them
        ensemble_misroute_probability(p_accuracy, n, 0)?;
        return Ok(p_accuracy);
    }
    (0..n)
        .map(|k| Ok(ensemble_misroute_probability(p_accuracy, n, k)? * p_assemble.powi(k as i32)))
        .sum()
}

/// Binomial-theorem form of [`ensemble_correct_probability`]:
/// `p (p + (1 - p) p_assemble)^(n - 1)`.
pub fn ensemble_correct_closed_form(p_accuracy: f64, p_assemble: f64, n: usize) -> Result<f64> {
    check_probability("p_accuracy", p_accuracy)?;
    check_probability("p_assemble", p_assemble)?;
    if n < 2 {
        return Err(Error::OutOfRange(format!("class count {n} < 2")));
    }
    Ok(p_accuracy * (p_accuracy + (1.0 - p_accuracy) * p_assemble).powi(n as i32 - 1))
}
