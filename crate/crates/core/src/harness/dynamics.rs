use serde::Serialize;
use serde_json::json;

use super::{grid, prepare_out, write_csv, write_json, Ctx, Report};
use crate::dynamics::{
    build_multiclass_matrix, converges, ensemble_correct_probability, spectral_radius, symmetric_eigenvalues,
    ConfusionMix, TeacherProfile,
};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct SpectrumRow {
    p: f64,
    r: f64,
    n: usize,
    rho: f64,
    /// `(p - r) / p`, repeated n - 1 times.
    lambda_repeated: f64,
    lambda_n: f64,
    max_abs_closed_form: f64,
    converges: bool,
}

const SPECTRUM_HEADER: &[&str] =
    &["p", "r", "n", "rho", "lambda_repeated", "lambda_n", "max_abs_closed_form", "converges"];

#[derive(Serialize)]
struct EnsembleRow {
    n: usize,
    p_accuracy: f64,
    p_assemble: f64,
    p_correct: f64,
}

fn range(ctx: &Ctx, prefix: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    let c = &ctx.cfg;
    let key = |s: &str| format!("{prefix}_{s}");
    if c.has(&key("values")) {
        return c.list(&key("values"), &[]);
    }
    grid(c.get(&key("min"), min)?, c.get(&key("max"), max)?, c.get(&key("step"), step)?)
}

pub(super) fn run(ctx: &Ctx) -> Result<Report> {
    let ps = range(ctx, "p", 0.05, 1.0, 0.05)?;
    let rs = range(ctx, "r", 0.05, 1.0, 0.05)?;
    let n_min: usize = ctx.cfg.get("n_min", 2)?;
    let n_max: usize = ctx.cfg.get("n_max", 10)?;
    let accs = ctx.cfg.list("acc_values", &[0.9, 0.95, 0.98, 0.99])?;
    let assembles = range(ctx, "assemble", 0.0, 1.0, 0.1)?;
    ctx.cfg.reject_unknown()?;
    if n_min < 2 {
        return Err(Error::InvalidConfig("n_min must be >= 2".into()));
    }
    if let Some(p) = ps.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidConfig(format!("precision grid value {p} outside (0, 1]")));
    }

    prepare_out(&ctx.out)?;
    let mut spectrum = Vec::new();
    for n in n_min..=n_max {
        let mix = ConfusionMix::uniform(n)?;
        for &p in &ps {
            for &r in &rs {
                let profile = TeacherProfile::new(p, r)?;
                let rho = spectral_radius(&build_multiclass_matrix(&vec![profile; n], &mix)?)?;
                let lambdas = symmetric_eigenvalues(p, r, n)?;
                spectrum.push(SpectrumRow {
                    p,
                    r,
                    n,
                    rho,
                    lambda_repeated: lambdas[0],
                    lambda_n: lambdas[n - 1],
                    max_abs_closed_form: lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs())),
                    converges: converges(rho),
                });
            }
        }
    }
    let spectrum_path = ctx.path("dynamics.csv");
    write_csv(&spectrum_path, SPECTRUM_HEADER, &spectrum)?;

    let mut accuracy = Vec::new();
    for n in n_min..=n_max {
        for &p_accuracy in &accs {
            for &p_assemble in &assembles {
                let p_correct = ensemble_correct_probability(p_accuracy, p_assemble, n)?;
                accuracy.push(EnsembleRow { n, p_accuracy, p_assemble, p_correct });
            }
        }
    }
    let ensemble_path = ctx.path("ensemble_accuracy.csv");
    write_csv(&ensemble_path, &["n", "p_accuracy", "p_assemble", "p_correct"], &accuracy)?;

    let summary = json!({ "command": "dynamics", "seed": ctx.seed, "spectrum_rows": spectrum.len() });
    let summary_path = ctx.path("summary.json");
    write_json(&summary_path, &summary)?;
    Ok(Report { files: vec![spectrum_path, ensemble_path, summary_path], summary })
}
