//! `stein theory-check`: numerical verification of the KL perturbation
//! derivative, the Fisher-divergence identity, and Stein's identity.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde_json::json;

use stein_core::ksd::{
    fisher_identity_check, kl_perturbation_gradient_check, stein_identity_residual, Gaussian1d,
};
use stein_core::rng::{streams, RngStream};
use stein_core::targets::GaussianMixture;
use stein_core::TargetDensity;

use crate::config::{CliError, CliResult, ConfigMap};

#[derive(ClapArgs)]
pub struct Args {
    /// Finite-difference step for the KL derivative checks.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Starting quadrature node count (doubles until converged).
    #[arg(long)]
    min_nodes: Option<usize>,
    /// Monte Carlo sample count for the Fisher and Stein checks.
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Relative-error gate for the quadrature checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed for the Monte Carlo streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct CheckRow {
    name: &'static str,
    analytic: f64,
    numeric: f64,
    abs_error: f64,
    rel_error: f64,
    se: Option<f64>,
    criterion: String,
    pass: bool,
}

pub fn run(args: Args) -> CliResult<bool> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    let fd_step = cfg.resolve(args.fd_step, "fd-step", 1e-3)?;
    let min_nodes = cfg.resolve(args.min_nodes, "min-nodes", 256)?;
    let mc_samples = cfg.resolve(args.mc_samples, "mc-samples", 100_000)?;
    let tolerance = cfg.resolve(args.tolerance, "tolerance", 1e-4)?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    let json = cfg.resolve_switch(args.json, "json")?;
    cfg.finish()?;
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(CliError::usage(format!(
            "invalid value for --tolerance: must be positive and finite, got {tolerance}"
        )));
    }
    if mc_samples < 1000 {
        return Err(CliError::usage(format!(
            "invalid value for --mc-samples: must be at least 1000, got {mc_samples}"
        )));
    }

    let std_normal = Gaussian1d::new(0.0, 1.0).map_err(CliError::from)?;
    let shifted = Gaussian1d::new(1.0, 1.0).map_err(CliError::from)?;
    let wide = Gaussian1d::new(0.0, 4.0).map_err(CliError::from)?;
    let mixture = GaussianMixture::univariate(&[1.0, 2.0], &[-2.0, 2.0], &[1.0, 1.0])
        .map_err(CliError::from)?;

    let mut rows: Vec<CheckRow> = Vec::with_capacity(9);
    let usage = |flag: &str, e: stein_core::SteinError| {
        CliError::usage(format!("invalid value for {flag}: {e}"))
    };

    // KL perturbation derivative, three transport directions.
    let kl_cases: [(&'static str, &dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64); 3] = [
        ("kl-shift", &|_| 1.0, &|_| 0.0),
        ("kl-scale", &|x| x, &|_| 1.0),
        ("kl-mixture", &|x: f64| (-x * x / 2.0).exp(), &|x: f64| {
            -x * (-x * x / 2.0).exp()
        }),
    ];
    for &(name, phi, dphi) in kl_cases.iter() {
        let report = if name == "kl-mixture" {
            kl_perturbation_gradient_check(
                std_normal,
                &|x| mixture.log_density(&[x]),
                &|x| {
                    let mut s = [0.0];
                    mixture.score(&[x], &mut s);
                    s[0]
                },
                phi,
                dphi,
                fd_step,
                min_nodes,
            )
        } else {
            kl_perturbation_gradient_check(
                std_normal,
                &|x| shifted.log_density(x),
                &|x| shifted.score(x),
                phi,
                dphi,
                fd_step,
                min_nodes,
            )
        }
        .map_err(|e| match e {
            stein_core::SteinError::InvalidArgument(_) => usage("--fd-step/--min-nodes", e),
            other => CliError::from(other),
        })?;
        let pass = report.rel_error <= tolerance;
        rows.push(CheckRow {
            name,
            analytic: report.analytic,
            numeric: report.numeric,
            abs_error: report.abs_error,
            rel_error: report.rel_error,
            se: None,
            criterion: format!("rel error <= {tolerance:e}"),
            pass,
        });
    }

    // Fisher-divergence identity on three Gaussian pairs.
    let fisher_cases = [
        ("fisher-equal", std_normal, std_normal),
        ("fisher-shift", std_normal, shifted),
        ("fisher-scale", std_normal, wide),
    ];
    for (idx, &(name, q, p)) in fisher_cases.iter().enumerate() {
        let mut rng = RngStream::new(seed, streams::THEORY_MC + 3 + idx as u64);
        let report =
            fisher_identity_check(q, p, mc_samples, &mut rng).map_err(CliError::from)?;
        let se = report.numeric_se.unwrap_or(0.0);
        let pass = report.abs_error <= 3.0 * se;
        rows.push(CheckRow {
            name,
            analytic: report.analytic,
            numeric: report.numeric,
            abs_error: report.abs_error,
            rel_error: report.rel_error,
            se: Some(se),
            criterion: "abs error <= 3*SE".into(),
            pass,
        });
    }

    // Stein's identity under N(0,1) for phi in {1, x, x^2}.
    let target = GaussianMixture::univariate(&[1.0], &[0.0], &[1.0]).map_err(CliError::from)?;
    let stein_cases: [(&'static str, &dyn Fn(&[f64], &mut [f64]) -> f64); 3] = [
        ("stein-const", &|_x, out| {
            out[0] = 1.0;
            0.0
        }),
        ("stein-linear", &|x, out| {
            out[0] = x[0];
            1.0
        }),
        ("stein-quadratic", &|x, out| {
            out[0] = x[0] * x[0];
            2.0 * x[0]
        }),
    ];
    for (idx, &(name, phi)) in stein_cases.iter().enumerate() {
        let mut rng = RngStream::new(seed, streams::THEORY_MC + 6 + idx as u64);
        let (mean, se) =
            stein_identity_residual(&target, phi, mc_samples, &mut rng).map_err(CliError::from)?;
        let pass = mean.abs() <= 3.0 * se;
        rows.push(CheckRow {
            name,
            analytic: 0.0,
            numeric: mean,
            abs_error: mean.abs(),
            rel_error: mean.abs(),
            se: Some(se),
            criterion: "abs error <= 3*SE".into(),
            pass,
        });
    }

    let all_pass = rows.iter().all(|r| r.pass);
    if json {
        let checks: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "check": r.name,
                    "analytic": r.analytic,
                    "numeric": r.numeric,
                    "abs_error": r.abs_error,
                    "rel_error": r.rel_error,
                    "se": r.se,
                    "criterion": r.criterion,
                    "pass": r.pass,
                })
            })
            .collect();
        let report = json!({
            "fd_step": fd_step,
            "min_nodes": min_nodes,
            "mc_samples": mc_samples,
            "tolerance": tolerance,
            "seed": seed,
            "checks": checks,
            "all_pass": all_pass,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("static report"));
    } else {
        println!(
            "{:<16} {:>24} {:>24} {:>13} {:>13} {:<22} {}",
            "check", "analytic", "numeric", "rel error", "SE", "criterion", "result"
        );
        for r in &rows {
            let se = match r.se {
                Some(se) => format!("{se:.3e}"),
                None => "n/a".into(),
            };
            println!(
                "{:<16} {:>24} {:>24} {:>13} {:>13} {:<22} {}",
                r.name,
                format!("{:.16e}", r.analytic),
                format!("{:.16e}", r.numeric),
                format!("{:.3e}", r.rel_error),
                se,
                r.criterion,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        println!(
            "theory-check: {}/{} checks passed",
            rows.iter().filter(|r| r.pass).count(),
            rows.len()
        );
    }
    Ok(all_pass)
}
