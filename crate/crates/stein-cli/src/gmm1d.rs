//! `stein gmm1d`: SVGD transport of a Gaussian-seeded ensemble onto a 1D
//! Gaussian mixture, with trajectory/KDE snapshots and moment-error sweeps.

use std::path::PathBuf;

use clap::Args as ClapArgs;

use stein_core::diagnostics::{estimate_expectation, kde_1d, KdeBandwidth, TestFunctionSpec};
use stein_core::ensemble::ParticleEnsemble;
use stein_core::rng::{streams, RngStream};
use stein_core::svgd::{run_svgd, StepSchedule, SvgdConfig};
use stein_core::targets::GaussianMixture;
use stein_core::{BandwidthPolicy, TargetDensity};

use crate::config::{parse_list, CliError, CliResult, ConfigMap};
use crate::output::{fmt17, out_dir, CsvFile};

#[derive(ClapArgs)]
pub struct Args {
    /// Particle count (>= 1).
    #[arg(long)]
    n: Option<usize>,
    /// Transport iterations (>= 1).
    #[arg(long)]
    iters: Option<usize>,
    /// Seed for all random streams of this run.
    #[arg(long)]
    seed: Option<u64>,
    /// Step schedule: adagrad | poly.
    #[arg(long)]
    schedule: Option<String>,
    /// AdaGrad master step size.
    #[arg(long)]
    master: Option<f64>,
    /// AdaGrad momentum on the squared-gradient history.
    #[arg(long)]
    autocorr: Option<f64>,
    /// Polynomial-decay scale (used with --schedule poly).
    #[arg(long)]
    poly_a: Option<f64>,
    /// Mean of the Gaussian initialization.
    #[arg(long)]
    init_mean: Option<f64>,
    /// Standard deviation of the Gaussian initialization.
    #[arg(long)]
    init_std: Option<f64>,
    /// Mixture weights, comma separated (normalized internally).
    #[arg(long)]
    weights: Option<String>,
    /// Mixture component means, comma separated.
    #[arg(long)]
    means: Option<String>,
    /// Mixture component standard deviations, comma separated.
    #[arg(long)]
    stds: Option<String>,
    /// Kernel bandwidth: median | median-init | mean-distance | a positive
    /// number.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Snapshot cadence for trajectory.csv and kde.csv; 0 records only the
    /// final ensemble.
    #[arg(long)]
    record_every: Option<usize>,
    /// KDE evaluation grid as lo,hi,points.
    #[arg(long)]
    kde_grid: Option<String>,
    /// Ensemble sizes for the moment sweep, comma separated. Defaults to
    /// just --n.
    #[arg(long)]
    sweep_n: Option<String>,
    /// Independent trials per sweep size.
    #[arg(long)]
    trials: Option<usize>,
    /// Also write moments_mc.csv using exact mixture samples in place of
    /// SVGD particles.
    #[arg(long)]
    mc_comparator: bool,
    /// Output directory (default: $STEIN_OUT_DIR or the current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub(crate) fn parse_mixture(
    weights: &str,
    means: &str,
    stds: &str,
) -> CliResult<GaussianMixture> {
    let w = parse_list::<f64>(weights, "--weights")?;
    let m = parse_list::<f64>(means, "--means")?;
    let s = parse_list::<f64>(stds, "--stds")?;
    if m.len() != w.len() || s.len() != w.len() {
        return Err(CliError::usage(format!(
            "--weights/--means/--stds must have equal lengths, got {}/{}/{}",
            w.len(),
            m.len(),
            s.len()
        )));
    }
    let vars: Vec<f64> = s.iter().map(|v| v * v).collect();
    GaussianMixture::univariate(&w, &m, &vars)
        .map_err(|e| CliError::usage(format!("invalid mixture (--weights/--means/--stds): {e}")))
}

pub(crate) fn parse_bandwidth(raw: &str) -> CliResult<BandwidthPolicy> {
    match raw {
        "median" => Ok(BandwidthPolicy::MedianEveryIter),
        "median-init" => Ok(BandwidthPolicy::MedianInit),
        "mean-distance" => Ok(BandwidthPolicy::MeanDistance),
        other => {
            let h: f64 = other.parse().map_err(|_| {
                CliError::usage(format!(
                    "invalid value for --bandwidth: '{other}' is neither a policy name \
                     (median, median-init, mean-distance) nor a number"
                ))
            })?;
            if !(h > 0.0) || !h.is_finite() {
                return Err(CliError::usage(format!(
                    "invalid value for --bandwidth: must be positive and finite, got {h}"
                )));
            }
            Ok(BandwidthPolicy::Fixed(h))
        }
    }
}

pub(crate) fn build_schedule(
    schedule: &str,
    master: f64,
    autocorr: f64,
    poly_a: f64,
) -> CliResult<StepSchedule> {
    let schedule = match schedule {
        "adagrad" => StepSchedule::adagrad(master, autocorr),
        "poly" => StepSchedule::polynomial(poly_a),
        other => {
            return Err(CliError::usage(format!(
                "invalid value for --schedule: expected adagrad or poly, got '{other}'"
            )))
        }
    };
    schedule
        .validate()
        .map_err(|e| CliError::usage(format!("invalid schedule (--master/--autocorr/--poly-a): {e}")))?;
    Ok(schedule)
}

struct Resolved {
    n: usize,
    iters: usize,
    seed: u64,
    schedule_name: String,
    master: f64,
    autocorr: f64,
    poly_a: f64,
    init_mean: f64,
    init_std: f64,
    weights: String,
    means: String,
    stds: String,
    bandwidth: String,
    record_every: usize,
    kde_grid: (f64, f64, usize),
    sweep_n: Vec<usize>,
    trials: usize,
    mc_comparator: bool,
}

fn resolve(args: Args) -> CliResult<(Resolved, PathBuf)> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    let n = cfg.resolve(args.n, "n", 100)?;
    if n == 0 {
        return Err(CliError::usage(
            "invalid value for --n: must be at least 1",
        ));
    }
    let iters = cfg.resolve(args.iters, "iters", 2000)?;
    if iters == 0 {
        return Err(CliError::usage(
            "invalid value for --iters: must be at least 1",
        ));
    }
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    let schedule_name = cfg.resolve(args.schedule, "schedule", "adagrad".into())?;
    let master = cfg.resolve(args.master, "master", 0.05)?;
    let autocorr = cfg.resolve(args.autocorr, "autocorr", 0.9)?;
    let poly_a = cfg.resolve(args.poly_a, "poly-a", 1.0)?;
    let init_mean = cfg.resolve(args.init_mean, "init-mean", -10.0)?;
    let init_std = cfg.resolve(args.init_std, "init-std", 1.0)?;
    if !(init_std > 0.0) || !init_std.is_finite() {
        return Err(CliError::usage(format!(
            "invalid value for --init-std: must be positive and finite, got {init_std}"
        )));
    }
    let weights = cfg.resolve(args.weights, "weights", "1,2".into())?;
    let means = cfg.resolve(args.means, "means", "-2,2".into())?;
    let stds = cfg.resolve(args.stds, "stds", "1,1".into())?;
    let bandwidth = cfg.resolve(args.bandwidth, "bandwidth", "median".into())?;
    let record_every = cfg.resolve(args.record_every, "record-every", 100)?;
    let kde_raw = cfg.resolve(args.kde_grid, "kde-grid", "-14,6,501".into())?;
    let kde_parts = parse_list::<f64>(&kde_raw, "--kde-grid")?;
    if kde_parts.len() != 3 {
        return Err(CliError::usage(format!(
            "invalid value for --kde-grid: expected lo,hi,points, got '{kde_raw}'"
        )));
    }
    let (lo, hi, points_f) = (kde_parts[0], kde_parts[1], kde_parts[2]);
    let points = points_f as usize;
    if !(lo < hi) || points < 2 || points_f != points as f64 {
        return Err(CliError::usage(format!(
            "invalid value for --kde-grid: need lo < hi and an integer point count >= 2, \
             got '{kde_raw}'"
        )));
    }
    let sweep_raw = cfg.resolve_opt(args.sweep_n, "sweep-n")?;
    let sweep_n = match &sweep_raw {
        Some(raw) => {
            let sizes = parse_list::<usize>(raw, "--sweep-n")?;
            if sizes.iter().any(|&s| s == 0) {
                return Err(CliError::usage(
                    "invalid value for --sweep-n: sizes must be at least 1",
                ));
            }
            sizes
        }
        None => vec![n],
    };
    let trials = cfg.resolve(args.trials, "trials", 1)?;
    if trials == 0 {
        return Err(CliError::usage(
            "invalid value for --trials: must be at least 1",
        ));
    }
    let mc_comparator = cfg.resolve_switch(args.mc_comparator, "mc-comparator")?;
    let dir = out_dir(cfg.resolve_opt(args.out_dir, "out-dir")?)?;
    cfg.finish()?;
    Ok((
        Resolved {
            n,
            iters,
            seed,
            schedule_name,
            master,
            autocorr,
            poly_a,
            init_mean,
            init_std,
            weights,
            means,
            stds,
            bandwidth,
            record_every,
            kde_grid: (lo, hi, points),
            sweep_n,
            trials,
            mc_comparator,
        },
        dir,
    ))
}

impl Resolved {
    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("iters", self.iters.to_string()),
            ("seed", self.seed.to_string()),
            ("schedule", self.schedule_name.clone()),
            ("master", self.master.to_string()),
            ("autocorr", self.autocorr.to_string()),
            ("poly-a", self.poly_a.to_string()),
            ("init-mean", self.init_mean.to_string()),
            ("init-std", self.init_std.to_string()),
            ("weights", self.weights.clone()),
            ("means", self.means.clone()),
            ("stds", self.stds.clone()),
            ("bandwidth", self.bandwidth.clone()),
            ("record-every", self.record_every.to_string()),
            (
                "kde-grid",
                format!(
                    "{},{},{}",
                    self.kde_grid.0, self.kde_grid.1, self.kde_grid.2
                ),
            ),
            (
                "sweep-n",
                self.sweep_n
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("trials", self.trials.to_string()),
            ("mc-comparator", self.mc_comparator.to_string()),
        ]
    }
}

pub fn run(args: Args) -> CliResult<bool> {
    let (r, dir) = resolve(args)?;
    let mixture = parse_mixture(&r.weights, &r.means, &r.stds)?;
    let policy = parse_bandwidth(&r.bandwidth)?;
    let schedule = build_schedule(&r.schedule_name, r.master, r.autocorr, r.poly_a)?;
    let echo = r.echo();

    // Main transport run with snapshots.
    let mut config = SvgdConfig::new(r.iters, schedule, r.seed);
    config.bandwidth = policy;
    config.record_every = r.record_every;
    let mut init_rng = RngStream::new(r.seed, streams::INIT);
    let init = ParticleEnsemble::from_gaussian(r.n, 1, &[r.init_mean], r.init_std, &mut init_rng)?;
    let result = run_svgd(&config, &mixture, &init)?;

    let mut trajectory = CsvFile::create(
        &dir,
        "trajectory.csv",
        "gmm1d",
        &echo,
        &["iter", "particle_index", "value"],
    )?;
    for (iter, ensemble) in &result.snapshots {
        for i in 0..ensemble.n() {
            trajectory.row(&[
                iter.to_string(),
                i.to_string(),
                fmt17(ensemble.particle(i)[0]),
            ])?;
        }
    }
    let trajectory_path = trajectory.finish()?;

    let (lo, hi, points) = r.kde_grid;
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut kde = CsvFile::create(
        &dir,
        "kde.csv",
        "gmm1d",
        &echo,
        &["iter", "grid", "density"],
    )?;
    for (iter, ensemble) in &result.snapshots {
        let density = kde_1d(ensemble.data(), &grid, KdeBandwidth::Silverman)?;
        for (g, v) in grid.iter().zip(&density) {
            kde.row(&[iter.to_string(), fmt17(*g), fmt17(*v)])?;
        }
    }
    let kde_path = kde.finish()?;

    // Moment sweep: independent SVGD runs per (size, trial), reported for
    // the three standard test functions.
    let functions = TestFunctionSpec::standard_set();
    let truths: Vec<f64> = functions
        .iter()
        .map(|f| mixture.moment(f))
        .collect::<stein_core::Result<_>>()?;
    let mut estimates = vec![vec![[0.0f64; 3]; r.trials]; r.sweep_n.len()];
    for (size_idx, &size) in r.sweep_n.iter().enumerate() {
        for trial in 0..r.trials {
            let stream = streams::TRIAL_BASE + (size_idx * r.trials + trial) as u64;
            let mut rng = RngStream::new(r.seed, stream);
            let trial_init =
                ParticleEnsemble::from_gaussian(size, 1, &[r.init_mean], r.init_std, &mut rng)?;
            let mut trial_config = SvgdConfig::new(r.iters, schedule, r.seed);
            trial_config.bandwidth = policy;
            trial_config.record_every = 0;
            let run = run_svgd(&trial_config, &mixture, &trial_init)?;
            for (f_idx, f) in functions.iter().enumerate() {
                estimates[size_idx][trial][f_idx] = estimate_expectation(&run.ensemble, f)?;
            }
        }
    }
    let columns = [
        "n",
        "test function",
        "trial",
        "estimate",
        "truth",
        "squared error",
    ];
    let mut moments = CsvFile::create(&dir, "moments.csv", "gmm1d", &echo, &columns)?;
    for (size_idx, &size) in r.sweep_n.iter().enumerate() {
        for (f_idx, f) in functions.iter().enumerate() {
            for trial in 0..r.trials {
                let est = estimates[size_idx][trial][f_idx];
                let truth = truths[f_idx];
                let err = (est - truth) * (est - truth);
                moments.row(&[
                    size.to_string(),
                    f.label().to_string(),
                    trial.to_string(),
                    fmt17(est),
                    fmt17(truth),
                    fmt17(err),
                ])?;
            }
        }
    }
    let moments_path = moments.finish()?;

    let mut written = vec![trajectory_path, kde_path, moments_path];
    if r.mc_comparator {
        let mut mc = CsvFile::create(&dir, "moments_mc.csv", "gmm1d", &echo, &columns)?;
        for (size_idx, &size) in r.sweep_n.iter().enumerate() {
            // Draw all trials' samples first so rows can still be emitted
            // grouped by test function.
            let mut sample_means = vec![[0.0f64; 3]; r.trials];
            for (trial, means) in sample_means.iter_mut().enumerate() {
                let stream = streams::MC_BASE + (size_idx * r.trials + trial) as u64;
                let mut rng = RngStream::new(r.seed, stream);
                let mut x = [0.0f64];
                let mut sums = [0.0f64; 3];
                for _ in 0..size {
                    mixture.sample_into(&mut rng, &mut x);
                    for (f_idx, f) in functions.iter().enumerate() {
                        sums[f_idx] += f.evaluate(x[0]);
                    }
                }
                for f_idx in 0..3 {
                    means[f_idx] = sums[f_idx] / size as f64;
                }
            }
            for (f_idx, f) in functions.iter().enumerate() {
                for (trial, means) in sample_means.iter().enumerate() {
                    let est = means[f_idx];
                    let truth = truths[f_idx];
                    let err = (est - truth) * (est - truth);
                    mc.row(&[
                        size.to_string(),
                        f.label().to_string(),
                        trial.to_string(),
                        fmt17(est),
                        fmt17(truth),
                        fmt17(err),
                    ])?;
                }
            }
        }
        written.push(mc.finish()?);
    }

    let final_mean = estimate_expectation(&result.ensemble, &TestFunctionSpec::X)?;
    let final_second = estimate_expectation(&result.ensemble, &TestFunctionSpec::XSquared)?;
    println!(
        "gmm1d: n = {}, {} iterations; E[x] = {}, E[x^2] = {}",
        r.n,
        r.iters,
        fmt17(final_mean),
        fmt17(final_second)
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(true)
}
