//! How ensemble accuracy decays with the class count: the closed form next
//! to a Monte Carlo of the vote-and-resolve process.

use bpt::dynamics::ensemble_correct_probability;
use bpt::ensemble::simulate_resolution;

fn main() -> bpt::Result<()> {
    let p_assemble = 0.95;
    println!("{:>3} {:>6} {:>9} {:>9} {:>9} {:>6}", "n", "p", "formula", "simulated", "recovered", "evals");
    for p in [0.9, 0.98] {
        for n in [2, 3, 5, 10, 20] {
            let s = simulate_resolution(p, p_assemble, n, 100_000, n as u64)?;
            println!(
                "{n:>3} {p:>6} {:>9.4} {:>9.4} {:>9.4} {:>6.2}",
                ensemble_correct_probability(p, p_assemble, n)?,
                s.all_correct,
                s.recovered,
                s.mean_evaluations
            );
        }
    }
    Ok(())
}
