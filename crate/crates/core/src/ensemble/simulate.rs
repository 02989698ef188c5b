use rand::Rng as _;

use crate::error::{check_probability, Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionStats {
    pub trials: usize,
    /// The true class fired and every pairwise model consulted answered correctly.
    pub all_correct: f64,
    /// The resolved class equals the true one, whatever happened on the way.
    pub recovered: f64,
    pub mean_evaluations: f64,
}

impl ResolutionStats {
    /// Binomial standard error of `all_correct`.
    pub fn sigma(&self) -> f64 {
        (self.all_correct * (1.0 - self.all_correct) / self.trials as f64).sqrt()
    }
}

/// Monte Carlo of the resolution process with independent components: each
/// one-vs-rest model is right with `p_accuracy`, each consulted pairwise model
/// with `p_assemble`. A pair without the true class has no right answer; it
/// keeps either side with equal odds and still counts as a consulted model.
pub fn simulate_resolution(
    p_accuracy: f64,
    p_assemble: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ResolutionStats> {
    check_probability("p_accuracy", p_accuracy)?;
    check_probability("p_assemble", p_assemble)?;
    if n < 2 || trials == 0 {
        return Err(Error::InvalidConfig("need n >= 2 classes and >= 1 trial".into()));
    }
    let mut rng = rng_for(seed, &[]);
    let (mut all_correct, mut recovered, mut evaluations) = (0usize, 0usize, 0usize);
    let mut active = Vec::with_capacity(n);
    for _ in 0..trials {
        // by symmetry the true class can be fixed anywhere; draw it to exercise the order
        let truth = rng.gen_range(0..n);
        active.clear();
        for k in 0..n {
            let fires = if k == truth { rng.gen_bool(p_accuracy) } else { !rng.gen_bool(p_accuracy) };
            if fires {
                active.push(k);
            }
        }
        let truth_fired = active.contains(&truth);
        let mut clean = truth_fired;
        let class = if active.is_empty() {
            rng.gen_range(0..n)
        } else {
            while active.len() > 1 {
                let (i, j) = (active[0], active[1]);
                let right = rng.gen_bool(p_assemble);
                clean &= right;
                evaluations += 1;
                let keep_i = if i == truth {
                    right
                } else if j == truth {
                    !right
                } else {
                    rng.gen_bool(0.5)
                };
                active.remove(if keep_i { 1 } else { 0 });
            }
            active[0]
        };
        all_correct += clean as usize;
        recovered += (class == truth) as usize;
    }
    let t = trials as f64;
    Ok(ResolutionStats {
        trials,
        all_correct: all_correct as f64 / t,
        recovered: recovered as f64 / t,
        mean_evaluations: evaluations as f64 / t,
    })
}
