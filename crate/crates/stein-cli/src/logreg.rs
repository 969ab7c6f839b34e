//! `stein logreg`: Bayesian logistic regression with a Gamma hyperprior on
//! the weight precision. Runs SVGD against MAP and SGLD baselines and writes
//! posterior-predictive test metrics at a fixed cadence.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args as ClapArgs;

use stein_core::baselines::{SgldConfig, SgldSampler};
use stein_core::dataio::{
    load_csv, load_libsvm, standardize, synth_logistic, train_test_split, Dataset,
};
use stein_core::diagnostics::classification_metrics;
use stein_core::ensemble::ParticleEnsemble;
use stein_core::rng::{streams, BatchSchedule, RngStream};
use stein_core::svgd::{svgd_step, ScheduleState, StepSchedule};
use stein_core::targets::{augment_intercept, BlrPosterior};
use stein_core::{BandwidthSelector, TargetDensity};

use crate::config::{parse_list, CliError, CliResult, ConfigMap};
use crate::gmm1d::parse_bandwidth;
use crate::output::{fmt17, out_dir, CsvFile};

#[derive(ClapArgs)]
pub struct Args {
    /// Dataset file; .csv is parsed as CSV with a `label` header column,
    /// anything else as libsvm text.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Generate a synthetic dataset instead, e.g. "N=2000,d=5".
    #[arg(long)]
    synthetic: Option<String>,
    /// Norm of the synthetic true weight vector (placed on the first
    /// coordinate).
    #[arg(long)]
    w_norm: Option<f64>,
    /// Synthetic label-flip probability in [0, 0.5).
    #[arg(long)]
    noise: Option<f64>,
    /// Held-out fraction for the test split.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Skip feature standardization.
    #[arg(long)]
    no_standardize: bool,
    /// Particle count.
    #[arg(long)]
    n: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    /// SVGD / SGLD iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Iterations for the full-batch MAP baseline.
    #[arg(long)]
    map_iters: Option<usize>,
    /// Metric recording cadence in iterations; 0 records only the final
    /// state.
    #[arg(long)]
    record_every: Option<usize>,
    /// Comma-separated baselines to run: map, sgld-parallel, sgld-seq.
    #[arg(long)]
    baseline: Option<String>,
    /// SGLD step scale; when absent and an SGLD baseline is requested, it is
    /// chosen by a validation sweep over --sgld-grid.
    #[arg(long)]
    sgld_a: Option<f64>,
    /// Candidate SGLD step scales for the validation sweep.
    #[arg(long)]
    sgld_grid: Option<String>,
    /// SGLD step-size decay exponent.
    #[arg(long)]
    sgld_exponent: Option<f64>,
    /// AdaGrad master step size (SVGD and MAP).
    #[arg(long)]
    master: Option<f64>,
    /// AdaGrad momentum on the squared-gradient history.
    #[arg(long)]
    autocorr: Option<f64>,
    /// Kernel bandwidth policy for SVGD.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Seed for all random streams of this run.
    #[arg(long)]
    seed: Option<u64>,
    /// Record real elapsed seconds in the wallclock column (breaks
    /// byte-reproducibility; default writes 0).
    #[arg(long)]
    wallclock: bool,
    /// Output directory (default: $STEIN_OUT_DIR or the current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Baseline {
    Map,
    SgldParallel,
    SgldSeq,
}

fn parse_baselines(raw: &str) -> CliResult<Vec<Baseline>> {
    let mut out = Vec::new();
    for token in raw.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let b = match token {
            "map" => Baseline::Map,
            "sgld-parallel" => Baseline::SgldParallel,
            "sgld-seq" => Baseline::SgldSeq,
            other => {
                return Err(CliError::usage(format!(
                    "invalid value for --baseline: unknown method '{other}' \
                     (expected map, sgld-parallel, sgld-seq)"
                )))
            }
        };
        if out.contains(&b) {
            return Err(CliError::usage(format!(
                "invalid value for --baseline: '{token}' listed twice"
            )));
        }
        out.push(b);
    }
    Ok(out)
}

fn parse_synthetic(spec: &str) -> CliResult<(usize, usize)> {
    let (mut n, mut d) = (None, None);
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (key, value) = token.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "invalid value for --synthetic: expected key=value pairs, got '{token}'"
            ))
        })?;
        let parsed: usize = value.trim().parse().map_err(|_| {
            CliError::usage(format!(
                "invalid value for --synthetic: '{}' is not a positive integer",
                value.trim()
            ))
        })?;
        match key.trim() {
            "N" => n = Some(parsed),
            "d" => d = Some(parsed),
            other => {
                return Err(CliError::usage(format!(
                    "invalid value for --synthetic: unknown key '{other}' (expected N and d)"
                )))
            }
        }
    }
    match (n, d) {
        (Some(n), Some(d)) if n > 0 && d > 0 => Ok((n, d)),
        _ => Err(CliError::usage(format!(
            "invalid value for --synthetic: need both N and d, e.g. \"N=2000,d=5\", got '{spec}'"
        ))),
    }
}

struct MetricsRow {
    method: &'static str,
    iteration: usize,
    epoch_fraction: f64,
    accuracy: f64,
    avg_ll: f64,
    wallclock: f64,
}

/// Posterior-predictive metrics of an ensemble on the held-out set.
fn test_metrics(
    posterior: &BlrPosterior,
    ensemble: &ParticleEnsemble,
    test_features: &[f64],
    test_labels: &[f64],
) -> CliResult<(f64, f64)> {
    let probs = posterior
        .predictive_probs(ensemble, test_features, test_labels.len())
        .map_err(CliError::from)?;
    let m = classification_metrics(&probs, test_labels).map_err(CliError::from)?;
    Ok((m.accuracy, m.avg_log_likelihood))
}

/// Whether metrics should be recorded after `done` of `total` iterations.
fn record_point(done: usize, total: usize, cadence: usize) -> bool {
    if done == total {
        return true;
    }
    cadence > 0 && done % cadence == 0
}

struct RunContext<'a> {
    posterior: &'a BlrPosterior,
    full_posterior: &'a BlrPosterior,
    test_features: &'a [f64],
    test_labels: &'a [f64],
    n_train: usize,
    batch: usize,
    record_every: usize,
    wallclock: bool,
    seed: u64,
}

impl RunContext<'_> {
    fn elapsed(&self, start: Instant) -> f64 {
        if self.wallclock {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

/// SVGD on the minibatch posterior; mirrors the library loop but evaluates
/// test metrics at the recording cadence instead of storing snapshots.
fn run_svgd_method(
    ctx: &RunContext,
    init: &ParticleEnsemble,
    iters: usize,
    schedule: StepSchedule,
    policy: stein_core::BandwidthPolicy,
    rows: &mut Vec<MetricsRow>,
) -> CliResult<()> {
    let start = Instant::now();
    let mut selector = BandwidthSelector::new(policy).map_err(CliError::from)?;
    let mut state = ScheduleState::new(schedule).map_err(CliError::from)?;
    let mut batches = match ctx.posterior.minibatch() {
        Some(spec) => Some(
            BatchSchedule::new(
                spec.num_data,
                spec.batch_size,
                RngStream::new(ctx.seed, streams::BATCH),
            )
            .map_err(CliError::from)?,
        ),
        None => None,
    };
    let epoch = |done: usize| done as f64 * ctx.batch as f64 / ctx.n_train as f64;
    let mut current = init.clone();
    if ctx.record_every > 0 {
        let (accuracy, avg_ll) =
            test_metrics(ctx.full_posterior, &current, ctx.test_features, ctx.test_labels)?;
        rows.push(MetricsRow {
            method: "svgd",
            iteration: 0,
            epoch_fraction: 0.0,
            accuracy,
            avg_ll,
            wallclock: ctx.elapsed(start),
        });
    }
    for t in 0..iters {
        let outcome = svgd_step(
            &current,
            ctx.posterior,
            &mut selector,
            &mut state,
            t,
            batches.as_mut(),
        )
        .map_err(CliError::from)?;
        current = outcome.ensemble;
        let done = t + 1;
        if record_point(done, iters, ctx.record_every) {
            let (accuracy, avg_ll) =
                test_metrics(ctx.full_posterior, &current, ctx.test_features, ctx.test_labels)?;
            rows.push(MetricsRow {
                method: "svgd",
                iteration: done,
                epoch_fraction: epoch(done),
                accuracy,
                avg_ll,
                wallclock: ctx.elapsed(start),
            });
        }
    }
    Ok(())
}

/// Full-batch AdaGrad ascent from the origin; the long-run point baseline.
fn run_map_method(
    ctx: &RunContext,
    iters: usize,
    schedule: StepSchedule,
    rows: &mut Vec<MetricsRow>,
) -> CliResult<()> {
    let start = Instant::now();
    let d_state = ctx.full_posterior.dim();
    let mut state = ScheduleState::new(schedule).map_err(CliError::from)?;
    let mut x = vec![0.0; d_state];
    let mut grad = vec![0.0; d_state];
    let mut step = vec![0.0; d_state];
    let record = |x: &[f64], done: usize, start: Instant, rows: &mut Vec<MetricsRow>| -> CliResult<()> {
        let point = ParticleEnsemble::new(1, d_state, x.to_vec()).map_err(CliError::from)?;
        let (accuracy, avg_ll) =
            test_metrics(ctx.full_posterior, &point, ctx.test_features, ctx.test_labels)?;
        rows.push(MetricsRow {
            method: "map",
            iteration: done,
            // Full batch: every iteration visits the whole training set.
            epoch_fraction: done as f64,
            accuracy,
            avg_ll,
            wallclock: ctx.elapsed(start),
        });
        Ok(())
    };
    if ctx.record_every > 0 {
        record(&x, 0, start, rows)?;
    }
    for t in 0..iters {
        ctx.full_posterior.score(&x, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(CliError::from(stein_core::SteinError::NonFinite(format!(
                "map: non-finite gradient at iteration {t}"
            ))));
        }
        state.step(t, &grad, &mut step).map_err(CliError::from)?;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += si;
        }
        let done = t + 1;
        if record_point(done, iters, ctx.record_every) {
            record(&x, done, start, rows)?;
        }
    }
    Ok(())
}

/// SGLD with one chain per particle; the ensemble of current chain states is
/// the posterior sample.
fn run_sgld_parallel(
    ctx: &RunContext,
    init: &ParticleEnsemble,
    iters: usize,
    config: &SgldConfig,
    rows: &mut Vec<MetricsRow>,
) -> CliResult<()> {
    let start = Instant::now();
    let mut sampler = SgldSampler::new(config, ctx.posterior).map_err(CliError::from)?;
    let epoch = |done: usize| done as f64 * ctx.batch as f64 / ctx.n_train as f64;
    let mut current = init.clone();
    if ctx.record_every > 0 {
        let (accuracy, avg_ll) =
            test_metrics(ctx.full_posterior, &current, ctx.test_features, ctx.test_labels)?;
        rows.push(MetricsRow {
            method: "sgld-parallel",
            iteration: 0,
            epoch_fraction: 0.0,
            accuracy,
            avg_ll,
            wallclock: ctx.elapsed(start),
        });
    }
    for t in 0..iters {
        current = sampler
            .step(&current, ctx.posterior, t)
            .map_err(CliError::from)?;
        let done = t + 1;
        if record_point(done, iters, ctx.record_every) {
            let (accuracy, avg_ll) =
                test_metrics(ctx.full_posterior, &current, ctx.test_features, ctx.test_labels)?;
            rows.push(MetricsRow {
                method: "sgld-parallel",
                iteration: done,
                epoch_fraction: epoch(done),
                accuracy,
                avg_ll,
                wallclock: ctx.elapsed(start),
            });
        }
    }
    Ok(())
}

/// A single SGLD chain thinned through a ring buffer of its last `keep`
/// states; the buffer contents are the posterior sample.
fn run_sgld_seq(
    ctx: &RunContext,
    init_row: &[f64],
    keep: usize,
    iters: usize,
    config: &SgldConfig,
    rows: &mut Vec<MetricsRow>,
) -> CliResult<()> {
    let start = Instant::now();
    let single = SgldConfig {
        chains: 1,
        ..*config
    };
    let mut sampler = SgldSampler::new(&single, ctx.posterior).map_err(CliError::from)?;
    let d_state = ctx.posterior.dim();
    let mut current =
        ParticleEnsemble::new(1, d_state, init_row.to_vec()).map_err(CliError::from)?;
    let mut buffer: VecDeque<Vec<f64>> = VecDeque::with_capacity(keep);
    buffer.push_back(init_row.to_vec());
    let epoch = |done: usize| done as f64 * ctx.batch as f64 / ctx.n_train as f64;
    let record = |buffer: &VecDeque<Vec<f64>>,
                  done: usize,
                  rows: &mut Vec<MetricsRow>|
     -> CliResult<()> {
        let mut data = Vec::with_capacity(buffer.len() * d_state);
        for state in buffer {
            data.extend_from_slice(state);
        }
        let sample =
            ParticleEnsemble::new(buffer.len(), d_state, data).map_err(CliError::from)?;
        let (accuracy, avg_ll) =
            test_metrics(ctx.full_posterior, &sample, ctx.test_features, ctx.test_labels)?;
        rows.push(MetricsRow {
            method: "sgld-seq",
            iteration: done,
            epoch_fraction: epoch(done),
            accuracy,
            avg_ll,
            wallclock: ctx.elapsed(start),
        });
        Ok(())
    };
    if ctx.record_every > 0 {
        record(&buffer, 0, rows)?;
    }
    for t in 0..iters {
        current = sampler
            .step(&current, ctx.posterior, t)
            .map_err(CliError::from)?;
        if buffer.len() == keep {
            buffer.pop_front();
        }
        buffer.push_back(current.particle(0).to_vec());
        let done = t + 1;
        if record_point(done, iters, ctx.record_every) {
            record(&buffer, done, rows)?;
        }
    }
    Ok(())
}

/// Short validation runs over the step-scale grid; returns the scale whose
/// final chain ensemble maximizes held-out average log-likelihood.
fn sweep_sgld_a(
    train: &Dataset,
    grid: &[f64],
    batch: usize,
    chains: usize,
    steps: usize,
    exponent: f64,
    seed: u64,
) -> CliResult<f64> {
    let sweep_seed = seed.wrapping_add(1);
    let (subtrain, val) =
        train_test_split(train, 0.2, sweep_seed).map_err(CliError::from)?;
    let aug_sub = augment_intercept(subtrain.features(), subtrain.n(), subtrain.d())
        .map_err(CliError::from)?;
    let aug_val =
        augment_intercept(val.features(), val.n(), val.d()).map_err(CliError::from)?;
    let d_feat = subtrain.d() + 1;
    let posterior = BlrPosterior::new(
        aug_sub,
        subtrain.labels().to_vec(),
        d_feat,
        batch.min(subtrain.n()),
    )
    .map_err(CliError::from)?;
    let mut init_rng = RngStream::new(sweep_seed, streams::INIT);
    let init = posterior
        .prior_ensemble(chains, &mut init_rng)
        .map_err(CliError::from)?;
    let mut best: Option<(f64, f64)> = None;
    for &a in grid {
        let config = SgldConfig::new(a, chains, sweep_seed)
            .and_then(|c| c.with_exponent(exponent))
            .map_err(|e| CliError::usage(format!("invalid value for --sgld-grid: {e}")))?;
        let mut sampler = SgldSampler::new(&config, &posterior).map_err(CliError::from)?;
        let mut current = init.clone();
        let mut diverged = false;
        for t in 0..steps {
            match sampler.step(&current, &posterior, t) {
                Ok(next) => current = next,
                Err(stein_core::SteinError::NonFinite(_)) => {
                    // Too-large steps blow up; score them as unusable.
                    diverged = true;
                    break;
                }
                Err(e) => return Err(CliError::from(e)),
            }
        }
        let ll = if diverged {
            f64::NEG_INFINITY
        } else {
            let probs = posterior
                .predictive_probs(&current, &aug_val, val.n())
                .map_err(CliError::from)?;
            classification_metrics(&probs, val.labels())
                .map_err(CliError::from)?
                .avg_log_likelihood
        };
        if best.map_or(true, |(_, best_ll)| ll > best_ll) {
            best = Some((a, ll));
        }
    }
    Ok(best.expect("non-empty grid").0)
}

pub fn run(args: Args) -> CliResult<bool> {
    let mut cfg = ConfigMap::load(args.config.as_deref())?;
    let data = cfg.resolve_opt(args.data, "data")?;
    let synthetic = cfg.resolve_opt(args.synthetic, "synthetic")?;
    let w_norm = cfg.resolve(args.w_norm, "w-norm", 3.0)?;
    let noise = cfg.resolve(args.noise, "noise", 0.0)?;
    let test_fraction = cfg.resolve(args.test_fraction, "test-fraction", 0.2)?;
    let no_standardize = cfg.resolve_switch(args.no_standardize, "no-standardize")?;
    let n = cfg.resolve(args.n, "n", 100)?;
    let batch = cfg.resolve(args.batch, "batch", 50)?;
    let iters = cfg.resolve(args.iters, "iters", 3000)?;
    let map_iters = cfg.resolve(args.map_iters, "map-iters", 20_000)?;
    let record_every = cfg.resolve(args.record_every, "record-every", 100)?;
    let baseline_raw = cfg.resolve(args.baseline, "baseline", String::new())?;
    let sgld_a = cfg.resolve_opt(args.sgld_a, "sgld-a")?;
    let sgld_grid_raw = cfg.resolve(
        args.sgld_grid,
        "sgld-grid",
        "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1".into(),
    )?;
    let sgld_exponent = cfg.resolve(args.sgld_exponent, "sgld-exponent", 0.55)?;
    let master = cfg.resolve(args.master, "master", 0.05)?;
    let autocorr = cfg.resolve(args.autocorr, "autocorr", 0.9)?;
    let bandwidth = cfg.resolve(args.bandwidth, "bandwidth", "median".into())?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    let wallclock = cfg.resolve_switch(args.wallclock, "wallclock")?;
    let dir = out_dir(cfg.resolve_opt(args.out_dir, "out-dir")?)?;
    cfg.finish()?;

    if n == 0 {
        return Err(CliError::usage("invalid value for --n: must be at least 1"));
    }
    if iters == 0 {
        return Err(CliError::usage(
            "invalid value for --iters: must be at least 1",
        ));
    }
    if map_iters == 0 {
        return Err(CliError::usage(
            "invalid value for --map-iters: must be at least 1",
        ));
    }
    let baselines = parse_baselines(&baseline_raw)?;
    let schedule = StepSchedule::adagrad(master, autocorr);
    schedule
        .validate()
        .map_err(|e| CliError::usage(format!("invalid schedule (--master/--autocorr): {e}")))?;
    let policy = parse_bandwidth(&bandwidth)?;

    // Dataset: file or synthetic draw.
    let dataset = match (&data, &synthetic) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "--data and --synthetic are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(CliError::usage(
                "missing dataset: give --data or --synthetic",
            ))
        }
        (Some(path), None) => {
            let is_csv = path
                .extension()
                .map(|e| e.eq_ignore_ascii_case("csv"))
                .unwrap_or(false);
            if is_csv {
                load_csv(path).map_err(CliError::from)?
            } else {
                load_libsvm(path).map_err(CliError::from)?
            }
        }
        (None, Some(spec)) => {
            let (n_rows, d) = parse_synthetic(spec)?;
            if !(w_norm.is_finite()) {
                return Err(CliError::usage(format!(
                    "invalid value for --w-norm: must be finite, got {w_norm}"
                )));
            }
            let mut w_star = vec![0.0; d];
            w_star[0] = w_norm;
            synth_logistic(n_rows, &w_star, noise, seed).map_err(|e| match e {
                stein_core::SteinError::InvalidArgument(_) => {
                    CliError::usage(format!("invalid value for --synthetic/--noise: {e}"))
                }
                other => CliError::from(other),
            })?
        }
    };

    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::usage(format!(
            "invalid value for --test-fraction: must lie in (0, 1), got {test_fraction}"
        )));
    }
    let (raw_train, raw_test) =
        train_test_split(&dataset, test_fraction, seed).map_err(CliError::from)?;
    let (train, test) = if no_standardize {
        (raw_train, raw_test)
    } else {
        let (tr, te, _) = standardize(&raw_train, &raw_test).map_err(CliError::from)?;
        (tr, te)
    };
    if batch == 0 || batch > train.n() {
        return Err(CliError::usage(format!(
            "invalid value for --batch: must lie in 1..={} (training rows), got {batch}",
            train.n()
        )));
    }

    let aug_train =
        augment_intercept(train.features(), train.n(), train.d()).map_err(CliError::from)?;
    let aug_test =
        augment_intercept(test.features(), test.n(), test.d()).map_err(CliError::from)?;
    let d_feat = train.d() + 1;
    let posterior = BlrPosterior::new(aug_train.clone(), train.labels().to_vec(), d_feat, batch)
        .map_err(CliError::from)?;
    // Full-batch twin: exact scores for MAP and for predictive evaluation.
    let full_posterior =
        BlrPosterior::new(aug_train, train.labels().to_vec(), d_feat, train.n())
            .map_err(CliError::from)?;

    // One prior ensemble shared by SVGD and sgld-parallel; chain 0's start is
    // the sgld-seq start.
    let mut init_rng = RngStream::new(seed, streams::INIT);
    let init = posterior
        .prior_ensemble(n, &mut init_rng)
        .map_err(CliError::from)?;

    let wants_sgld = baselines
        .iter()
        .any(|b| matches!(b, Baseline::SgldParallel | Baseline::SgldSeq));
    let mut sgld_a_selected = sgld_a;
    if wants_sgld && sgld_a_selected.is_none() {
        let grid = parse_list::<f64>(&sgld_grid_raw, "--sgld-grid")?;
        if grid.is_empty() {
            return Err(CliError::usage(
                "invalid value for --sgld-grid: need at least one step scale",
            ));
        }
        let chosen = sweep_sgld_a(
            &train,
            &grid,
            batch,
            n.min(20),
            iters.min(500),
            sgld_exponent,
            seed,
        )?;
        sgld_a_selected = Some(chosen);
    }

    let ctx = RunContext {
        posterior: &posterior,
        full_posterior: &full_posterior,
        test_features: &aug_test,
        test_labels: test.labels(),
        n_train: train.n(),
        batch,
        record_every,
        wallclock,
        seed,
    };

    let mut rows: Vec<MetricsRow> = Vec::new();
    run_svgd_method(&ctx, &init, iters, schedule, policy, &mut rows)?;
    for b in &baselines {
        match b {
            Baseline::Map => run_map_method(&ctx, map_iters, schedule, &mut rows)?,
            Baseline::SgldParallel | Baseline::SgldSeq => {
                let a = sgld_a_selected.expect("selected above");
                let config = SgldConfig::new(a, n, seed)
                    .and_then(|c| c.with_exponent(sgld_exponent))
                    .map_err(|e|CliError::usage(format!("invalid value for --sgld-a: {e}")))?;
                match b {
                    Baseline::SgldParallel => {
                        run_sgld_parallel(&ctx, &init, iters, &config, &mut rows)?
                    }
                    Baseline::SgldSeq => {
                        run_sgld_seq(&ctx, init.particle(0), n, iters, &config, &mut rows)?
                    }
                    Baseline::Map => unreachable!(),
                }
            }
        }
    }

    // Resolved-config echo, including dataset provenance.
    let mut echo: Vec<(&str, String)> = vec![
        (
            "data",
            data.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into()),
        ),
        (
            "synthetic",
            synthetic.clone().unwrap_or_else(|| "none".into()),
        ),
        ("w-norm", w_norm.to_string()),
        ("noise", noise.to_string()),
        ("test-fraction", test_fraction.to_string()),
        ("standardize", (!no_standardize).to_string()),
        ("n", n.to_string()),
        ("batch", batch.to_string()),
        ("iters", iters.to_string()),
        ("map-iters", map_iters.to_string()),
        ("record-every", record_every.to_string()),
        ("baseline", baseline_raw.clone()),
        ("sgld-exponent", sgld_exponent.to_string()),
        ("master", master.to_string()),
        ("autocorr", autocorr.to_string()),
        ("bandwidth", bandwidth.clone()),
        ("seed", seed.to_string()),
        ("wallclock", wallclock.to_string()),
        ("n-train", train.n().to_string()),
        ("n-test", test.n().to_string()),
        ("d", train.d().to_string()),
    ];
    if let Some(sha) = &dataset.meta.sha256 {
        echo.push(("data-sha256", sha.clone()));
    }
    if let Some(a) = sgld_a_selected {
        echo.push(("sgld-a-selected", a.to_string()));
    }
    let mut csv = CsvFile::create(
        &dir,
        "metrics.csv",
        "logreg",
        &echo,
        &[
            "method",
            "iteration",
            "epoch-fraction",
            "accuracy",
            "avg-test-LL",
            "wallclock-seconds",
        ],
    )?;
    for row in &rows {
        csv.row(&[
            row.method.to_string(),
            row.iteration.to_string(),
            fmt17(row.epoch_fraction),
            fmt17(row.accuracy),
            fmt17(row.avg_ll),
            fmt17(row.wallclock),
        ])?;
    }
    let path = csv.finish()?;

    // Final row per method, for the terminal.
    let mut seen: Vec<&'static str> = Vec::new();
    for row in rows.iter().rev() {
        if !seen.contains(&row.method) {
            seen.push(row.method);
        }
    }
    seen.reverse();
    for method in seen {
        if let Some(last) = rows.iter().rev().find(|r| r.method == method) {
            println!(
                "{}: iteration {}, accuracy = {}, avg test LL = {}",
                method,
                last.iteration,
                fmt17(last.accuracy),
                fmt17(last.avg_ll)
            );
        }
    }
    println!("wrote {}", path.display());
    Ok(true)
}
