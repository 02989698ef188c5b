use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, FeatureMatrix};
use crate::rng::rng_for;

/// Result of Lloyd's algorithm. `wcss[t]` is the within-cluster sum of squares
/// of the assignment made at iteration `t`.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub centroids: FeatureMatrix,
    pub assignments: Vec<usize>,
    pub wcss: Vec<f64>,
}

impl Clustering {
    pub fn final_wcss(&self) -> f64 {
        *self.wcss.last().unwrap_or(&0.0)
    }
}

pub fn nearest(centroids: &FeatureMatrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter_rows().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_init(points: &FeatureMatrix, k: usize, seed: u64) -> FeatureMatrix {
    let mut rng = rng_for(seed, &[0]);
    let n = points.rows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter_rows()
        .map(|p| sq_dist(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            // duplicates only: any unused index
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, p) in points.iter_rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(next)));
        }
    }
    points.select(&chosen)
}

fn assign(points: &FeatureMatrix, centroids: &FeatureMatrix) -> Vec<(usize, f64)> {
    (0..points.rows())
        .into_par_iter()
        .map(|i| nearest(centroids, points.row(i)))
        .collect()
}

pub fn kmeans_fit(points: &FeatureMatrix, k: usize, iterations: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be positive".into()));
    }
    if points.rows() < k {
        return Err(Error::OutOfRange(format!(
            "{} points cannot seed {k} clusters",
            points.rows()
        )));
    }
    let d = points.cols();
    let mut centroids = plus_plus_init(points, k, seed);
    let mut wcss = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut labels = Vec::new();
    for _ in 0..iterations.max(1) {
        let found = assign(points, &centroids);
        labels = found.iter().map(|(k, _)| *k).collect::<Vec<_>>();
        wcss.push(found.iter().map(|(_, d)| d).sum());
        if previous.as_ref() == Some(&labels) {
            break;
        }
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter_rows().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut taken = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                let row = centroids.row_mut(c);
                for (r, s) in row.iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                    *r = s / counts[c] as f64;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // farthest point from its own (updated) centroid
                let far = (0..points.rows())
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(labels[a]));
                        let db = sq_dist(points.row(b), centroids.row(labels[b]));
                        da.total_cmp(&db)
                    })
                    .unwrap();
                taken.push(far);
                centroids.row_mut(c).copy_from_slice(points.row(far));
            }
        }
        previous = Some(labels.clone());
    }
    Ok(Clustering {
        centroids,
        assignments: labels,
        wcss,
    })
}
