//! `stein ksd`: kernelized Stein discrepancy of a particle set against a 1D
//! Gaussian-mixture target.

use std::fs;
use std::path::PathBuf;

use clap::Args as ClapArgs;

use stein_core::ensemble::ParticleEnsemble;
use stein_core::ksd::{ksd_squared, ksd_u_bootstrap, KsdEstimator};
use stein_core::rng::{streams, RngStream};
use stein_core::{BandwidthSelector, RbfKernel};

use crate::config::{parse_list, CliError, CliResult, ConfigMap};
use crate::gmm1d::{parse_bandwidth, parse_mixture};
use crate::output::fmt17;

#[derive(ClapArgs)]
pub struct Args {
    /// Text file of particles: one per line, whitespace-separated
    /// coordinates, '#' comments allowed. Mutually exclusive with
    /// --sample-normal.
    #[arg(long)]
    particles_file: Option<PathBuf>,
    /// Draw the particles as mean,std,count from a Gaussian instead of
    /// reading a file.
    #[arg(long)]
    sample_normal: Option<String>,
    /// Target mixture weights, comma separated.
    #[arg(long)]
    weights: Option<String>,
    /// Target mixture means, comma separated.
    #[arg(long)]
    means: Option<String>,
    /// Target mixture standard deviations, comma separated.
    #[arg(long)]
    stds: Option<String>,
    /// Kernel bandwidth: median | median-init | mean-distance | a positive
    /// number.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Bootstrap replicates for the U-statistic standard error; 0 disables.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Seed for sampling and the bootstrap.
    #[arg(long)]
    seed: Option<u64>,
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_particles(path: &PathBuf) -> CliResult<ParticleEnsemble> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::usage(format!(
            "invalid value for --particles-file: cannot read {}: {e}",
            path.display()
        ))
    })?;
    let mut data = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| {
                CliError::usage(format!(
                    "invalid value for --particles-file: line {}: '{token}' is not a number",
                    lineno + 1
                ))
            })?;
            row.push(v);
        }
        if n == 0 {
            d = row.len();
        } else if row.len() != d {
            return Err(CliError::usage(format!(
                "invalid value for --particles-file: line {}: expected {d} coordinates, got {}",
                lineno + 1,
                row.len()
            )));
        }
        data.extend_from_slice(&row);
        n += 1;
    }
    if n == 0 {
        return Err(CliError::usage(
            "invalid value for --particles-file: no particles found",
        ));
    }
    ParticleEnsemble::new(n, d, data)
        .map_err(|e| CliError::usage(format!("invalid value for --particles-file: {e}")))
}

pub fn run(args: Args) -> CliResult<bool> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    let particles_file = cfg.resolve_opt(args.particles_file, "particles-file")?;
    let sample_normal = cfg.resolve_opt(args.sample_normal, "sample-normal")?;
    let weights = cfg.resolve(args.weights, "weights", "1".into())?;
    let means = cfg.resolve(args.means, "means", "0".into())?;
    let stds = cfg.resolve(args.stds, "stds", "1".into())?;
    let bandwidth = cfg.resolve(args.bandwidth, "bandwidth", "median".into())?;
    let bootstrap = cfg.resolve(args.bootstrap, "bootstrap", 200)?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    cfg.finish()?;

    let ensemble = match (&particles_file, &sample_normal) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "--particles-file and --sample-normal are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(CliError::usage(
                "missing particle source: give --particles-file or --sample-normal",
            ))
        }
        (Some(path), None) => load_particles(path)?,
        (None, Some(spec)) => {
            let parts = parse_list::<f64>(spec, "--sample-normal")?;
            if parts.len() != 3 {
                return Err(CliError::usage(format!(
                    "invalid value for --sample-normal: expected mean,std,count, got '{spec}'"
                )));
            }
            let (mean, std, count_f) = (parts[0], parts[1], parts[2]);
            let count = count_f as usize;
            if count < 1 || count_f != count as f64 {
                return Err(CliError::usage(format!(
                    "invalid value for --sample-normal: count must be a positive integer, \
                     got {count_f}"
                )));
            }
            if !(std > 0.0) || !std.is_finite() {
                return Err(CliError::usage(format!(
                    "invalid value for --sample-normal: std must be positive and finite, \
                     got {std}"
                )));
            }
            let mut rng = RngStream::new(seed, streams::INIT);
            ParticleEnsemble::from_gaussian(count, 1, &[mean], std, &mut rng)
                .map_err(CliError::from)?
        }
    };

    let mixture = parse_mixture(&weights, &means, &stds)?;
    if ensemble.d() != 1 {
        return Err(CliError::usage(format!(
            "invalid value for --particles-file: the mixture target is univariate but the \
             particles have d = {}",
            ensemble.d()
        )));
    }

    let policy = parse_bandwidth(&bandwidth)?;
    let mut selector = BandwidthSelector::new(policy).map_err(CliError::from)?;
    let h = selector.select(&ensemble);
    let kernel = RbfKernel::new(h).map_err(CliError::from)?;

    let v = ksd_squared(&ensemble, &mixture, &kernel, KsdEstimator::VStatistic)
        .map_err(CliError::from)?;
    println!(
        "ksd: n = {}, d = {}, bandwidth = {}",
        ensemble.n(),
        ensemble.d(),
        fmt17(h)
    );
    println!("V-statistic: {}", fmt17(v.value));
    if ensemble.n() < 2 {
        println!("U-statistic: n/a (n = 1)");
        println!("bootstrap SE (U): n/a");
        return Ok(true);
    }
    let u = ksd_squared(&ensemble, &mixture, &kernel, KsdEstimator::UStatistic)
        .map_err(CliError::from)?;
    println!("U-statistic: {}", fmt17(u.value));
    if bootstrap == 0 {
        println!("bootstrap SE (U): n/a");
    } else {
        if bootstrap < 2 {
            return Err(CliError::usage(format!(
                "invalid value for --bootstrap: need at least 2 replicates, got {bootstrap}"
            )));
        }
        let mut rng = RngStream::new(seed, streams::BOOTSTRAP);
        let (_, se) = ksd_u_bootstrap(&ensemble, &mixture, &kernel, bootstrap, &mut rng)
            .map_err(CliError::from)?;
        println!("bootstrap SE (U): {}", fmt17(se));
    }
    Ok(true)
}
