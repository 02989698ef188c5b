//! Where identical teachers stop driving errors to zero: for each class count
//! the smallest precision on a 0.05 grid whose transition matrix has radius
//! below one, next to the (n - 1) / n prediction.

use bpt::dynamics::{
    build_binary_matrix, build_multiclass_matrix, check_bpt_condition, converges, iterate_errors, spectral_radius,
    ConfusionMix, ErrorState, TeacherProfile,
};

fn main() -> bpt::Result<()> {
    let r = 0.6;
    println!("{:>3} {:>10} {:>10}", "n", "first p", "(n-1)/n");
    for n in 2..=10 {
        let mix = ConfusionMix::uniform(n)?;
        let mut first = None;
        for k in 1..=20 {
            let p = k as f64 * 0.05;
            let m = build_multiclass_matrix(&vec![TeacherProfile::new(p, r)?; n], &mix)?;
            if converges(spectral_radius(&m)?) {
                first = Some(p);
                break;
            }
        }
        let shown = first.map_or("none".to_string(), |p| format!("{p:.2}"));
        println!("{n:>3} {shown:>10} {:>10.3}", (n - 1) as f64 / n as f64);
    }

    // binary case: errors shrink exactly when P+ + P- > 1
    for (pp, pn) in [(0.6, 0.6), (0.5, 0.5), (0.3, 0.4)] {
        let (pos, neg) = (TeacherProfile::new(pp, 0.6)?, TeacherProfile::new(pn, 0.6)?);
        let m = build_binary_matrix(pos, neg)?;
        let path = iterate_errors(&m, &ErrorState::new(vec![100.0, 100.0])?, 20)?;
        let last = path.last().map_or(0.0, ErrorState::sup_norm);
        println!(
            "P+={pp} P-={pn}: condition {}, radius {:.3}, errors after 20 rounds {last:.1}",
            check_bpt_condition(pos, neg),
            spectral_radius(&m)?
        );
    }
    Ok(())
}
