//! The SVGD transport direction, single steps, the full iteration loop, and
//! step-size schedules.
//!
//! One transport step moves every particle along the empirical steepest
//! descent direction
//!
//! ```text
//! phi(x) = (1/n) sum_j [ k(x_j, x) score(x_j) + grad_{x_j} k(x_j, x) ]
//! ```
//!
//! whose first (driving) term pulls particles toward high-density regions and
//! whose second (repulsive) term pushes them apart. All scores and the
//! direction are computed from the iteration-start snapshot and applied
//! simultaneously (Jacobi style); there is no in-place Gauss–Seidel variant.
//!
//! With a single particle the repulsive term vanishes and `k(x, x) = 1`, so
//! the update degenerates — exactly, to the last bit — to plain gradient
//! ascent on `log p`; see `map_gradient_ascent` in [`crate::baselines`].

use crate::ensemble::ParticleEnsemble;
use crate::error::{Result, SteinError};
use crate::kernels::{BandwidthPolicy, BandwidthSelector, RbfKernel};
use crate::ksd;
use crate::rng::{streams, BatchSchedule, RngStream};
use crate::target::TargetDensity;

/// Step-size schedule parameters. Runtime state (the AdaGrad accumulator)
/// lives in [`ScheduleState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// AdaGrad with momentum on the squared-gradient history:
    /// `accum <- autocorr * accum + (1 - autocorr) * g^2` (first call:
    /// `accum <- g^2`), `step = master * g / (fudge + sqrt(accum))`.
    AdaGrad {
        master: f64,
        autocorr: f64,
        fudge: f64,
    },
    /// `eps_t = a / (t + 1)^gamma`, iterations counted from t = 0.
    PolynomialDecay { a: f64, gamma: f64 },
}

impl StepSchedule {
    /// AdaGrad with the conventional fudge factor 1e-6.
    pub fn adagrad(master: f64, autocorr: f64) -> Self {
        StepSchedule::AdaGrad {
            master,
            autocorr,
            fudge: 1e-6,
        }
    }

    /// Polynomial decay with the default exponent 0.55.
    pub fn polynomial(a: f64) -> Self {
        StepSchedule::PolynomialDecay { a, gamma: 0.55 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::AdaGrad {
                master,
                autocorr,
                fudge,
            } => {
                if !(master >= 0.0) || !master.is_finite() {
                    return Err(SteinError::invalid(format!(
                        "adagrad: master step must be non-negative, got {master}"
                    )));
                }
                if !(0.0..1.0).contains(&autocorr) {
                    return Err(SteinError::invalid(format!(
                        "adagrad: autocorrelation must lie in [0, 1), got {autocorr}"
                    )));
                }
                if !(fudge > 0.0) {
                    return Err(SteinError::invalid(format!(
                        "adagrad: fudge factor must be positive, got {fudge}"
                    )));
                }
            }
            StepSchedule::PolynomialDecay { a, gamma } => {
                // a = 0 yields the identity map; allowed as a degenerate
                // sanity case, meaningful runs use a > 0.
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(SteinError::invalid(format!(
                        "polynomial decay: scale must be non-negative, got {a}"
                    )));
                }
                if !gamma.is_finite() {
                    return Err(SteinError::invalid("polynomial decay: exponent must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// A step schedule plus its mutable state (the per-coordinate accumulated
/// squared gradients for AdaGrad). The accumulator has one entry per
/// direction coordinate (n*d for an ensemble, d for a single chain) and is
/// lazily sized on the first call.
#[derive(Clone, Debug)]
pub struct ScheduleState {
    schedule: StepSchedule,
    accum: Option<Vec<f64>>,
}

impl ScheduleState {
    pub fn new(schedule: StepSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(ScheduleState {
            schedule,
            accum: None,
        })
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    /// Turn a descent direction into a step, updating the schedule state.
    /// `t` is the 0-based iteration index (only polynomial decay uses it).
    pub fn step(&mut self, t: usize, direction: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != direction.len() {
            return Err(SteinError::invalid(format!(
                "schedule: direction has {} entries but output has {}",
                direction.len(),
                out.len()
            )));
        }
        if let Some(bad) = direction.iter().position(|g| !g.is_finite()) {
            return Err(SteinError::NonFinite(format!(
                "schedule: direction entry {bad} is not finite"
            )));
        }
        match self.schedule {
            StepSchedule::AdaGrad {
                master,
                autocorr,
                fudge,
            } => {
                match &mut self.accum {
                    None => {
                        self.accum = Some(direction.iter().map(|g| g * g).collect());
                    }
                    Some(accum) => {
                        if accum.len() != direction.len() {
                            return Err(SteinError::invalid(format!(
                                "adagrad: accumulator sized for {} coordinates, direction has {}",
                                accum.len(),
                                direction.len()
                            )));
                        }
                        for (s, g) in accum.iter_mut().zip(direction) {
                            *s = autocorr * *s + (1.0 - autocorr) * g * g;
                        }
                    }
                }
                let accum = self.accum.as_ref().unwrap();
                for ((o, g), s) in out.iter_mut().zip(direction).zip(accum) {
                    *o = master * g / (fudge + s.sqrt());
                }
            }
            StepSchedule::PolynomialDecay { a, gamma } => {
                let eps = a / ((t + 1) as f64).powf(gamma);
                for (o, g) in out.iter_mut().zip(direction) {
                    *o = eps * g;
                }
            }
        }
        Ok(())
    }
}

/// Configuration of a full SVGD run.
#[derive(Clone, Debug)]
pub struct SvgdConfig {
    /// Number of transport steps; must be >= 1.
    pub iterations: usize,
    pub bandwidth: BandwidthPolicy,
    pub schedule: StepSchedule,
    /// Seeds the run's minibatch schedule (stream [`streams::BATCH`]).
    /// Ensemble initialization is the caller's responsibility.
    pub seed: u64,
    /// Trajectory snapshot cadence; 0 records only the final ensemble.
    pub record_every: usize,
    /// Draw one minibatch per particle instead of one shared minibatch per
    /// iteration. Off by default; sensitivity-study knob.
    pub batch_per_particle: bool,
    /// Record the V-statistic KSD of each post-step ensemble in the
    /// diagnostics. Off by default (adds O(n^2 d) per iteration and requires
    /// full-data scores).
    pub track_ksd: bool,
}

impl SvgdConfig {
    pub fn new(iterations: usize, schedule: StepSchedule, seed: u64) -> Self {
        SvgdConfig {
            iterations,
            bandwidth: BandwidthPolicy::default(),
            schedule,
            seed,
            record_every: 0,
            batch_per_particle: false,
            track_ksd: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(SteinError::invalid("svgd: iterations must be >= 1"));
        }
        self.schedule.validate()
    }
}

/// The SVGD direction split into its driving (kernel-weighted scores) and
/// repulsive (kernel gradients) components; `combined` is their exact
/// element-wise sum. All three are n x d row-major.
#[derive(Clone, Debug)]
pub struct SvgdDirection {
    pub combined: Vec<f64>,
    pub driving: Vec<f64>,
    pub repulsive: Vec<f64>,
}

fn check_direction_inputs(ensemble: &ParticleEnsemble, scores: &[f64]) -> Result<()> {
    if scores.len() != ensemble.n() * ensemble.d() {
        return Err(SteinError::invalid(format!(
            "svgd direction: scores must be {} x {}, got {} entries",
            ensemble.n(),
            ensemble.d(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().position(|v| !v.is_finite()) {
        return Err(SteinError::NonFinite(format!(
            "svgd direction: score entry for particle {} is not finite",
            bad / ensemble.d()
        )));
    }
    Ok(())
}

/// One output row: `phi(x_i)`, accumulated over j in index order so the
/// result does not depend on how rows are scheduled across threads.
fn fill_direction_row(
    i: usize,
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    h: f64,
    driving: &mut [f64],
    repulsive: &mut [f64],
    combined: &mut [f64],
) {
    let n = ensemble.n();
    let d = ensemble.d();
    let xi = ensemble.particle(i);
    driving.fill(0.0);
    repulsive.fill(0.0);
    let two_over_h = 2.0 / h;
    for j in 0..n {
        let xj = ensemble.particle(j);
        let sj = &scores[j * d..(j + 1) * d];
        let mut sq = 0.0;
        for (a, b) in xi.iter().zip(xj) {
            let t = a - b;
            sq += t * t;
        }
        let k = (-sq / h).exp();
        // grad_{x_j} k(x_j, x_i) = (2/h) (x_i - x_j) k
        for c in 0..d {
            driving[c] += k * sj[c];
            repulsive[c] += two_over_h * (xi[c] - xj[c]) * k;
        }
    }
    let inv_n = 1.0 / n as f64;
    for c in 0..d {
        driving[c] *= inv_n;
        repulsive[c] *= inv_n;
        combined[c] = driving[c] + repulsive[c];
    }
}

/// Sequential reference implementation of [`svgd_direction`].
pub fn svgd_direction_seq(
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    kernel: &RbfKernel,
) -> Result<SvgdDirection> {
    check_direction_inputs(ensemble, scores)?;
    let n = ensemble.n();
    let d = ensemble.d();
    let h = kernel.bandwidth();
    let mut driving = vec![0.0; n * d];
    let mut repulsive = vec![0.0; n * d];
    let mut combined = vec![0.0; n * d];
    for i in 0..n {
        fill_direction_row(
            i,
            ensemble,
            scores,
            h,
            &mut driving[i * d..(i + 1) * d],
            &mut repulsive[i * d..(i + 1) * d],
            &mut combined[i * d..(i + 1) * d],
        );
    }
    Ok(SvgdDirection {
        combined,
        driving,
        repulsive,
    })
}

/// The empirical steepest-descent direction: row i is `phi(x_i)` computed by
/// the 1/n pairwise sum. Parallelized over output rows when the `parallel`
/// feature is enabled; bitwise identical to [`svgd_direction_seq`] in either
/// case.
pub fn svgd_direction(
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    kernel: &RbfKernel,
) -> Result<SvgdDirection> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        check_direction_inputs(ensemble, scores)?;
        let n = ensemble.n();
        let d = ensemble.d();
        let h = kernel.bandwidth();
        let mut driving = vec![0.0; n * d];
        let mut repulsive = vec![0.0; n * d];
        let mut combined = vec![0.0; n * d];
        driving
            .par_chunks_mut(d)
            .zip(repulsive.par_chunks_mut(d))
            .zip(combined.par_chunks_mut(d))
            .enumerate()
            .for_each(|(i, ((dr, rp), cb))| {
                fill_direction_row(i, ensemble, scores, h, dr, rp, cb);
            });
        Ok(SvgdDirection {
            combined,
            driving,
            repulsive,
        })
    }
    #[cfg(not(feature = "parallel"))]
    {
        svgd_direction_seq(ensemble, scores, kernel)
    }
}

/// Squared empirical RKHS norm of the SVGD direction,
/// `||phi||^2 = (1/n^2) sum_ij u_p(x_i, x_j)`, assembled term by term from
/// the kernel primitives. Equals the V-statistic KSD of the ensemble (same
/// pairwise terms); `ksd::ksd_squared` computes that sum independently.
pub fn direction_norm_squared(
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    kernel: &RbfKernel,
) -> Result<f64> {
    check_direction_inputs(ensemble, scores)?;
    let n = ensemble.n();
    let d = ensemble.d();
    let mut total = 0.0;
    for i in 0..n {
        let xi = ensemble.particle(i);
        let si = &scores[i * d..(i + 1) * d];
        let mut row = 0.0;
        for j in 0..n {
            let xj = ensemble.particle(j);
            let sj = &scores[j * d..(j + 1) * d];
            let k = kernel.eval(xi, xj);
            let gi = kernel.grad_first(xi, xj); // grad wrt x_i
            let gj = kernel.grad_first(xj, xi); // grad wrt x_j, by symmetry
            let mut u = kernel.mixed_trace(xi, xj);
            for c in 0..d {
                u += si[c] * sj[c] * k + si[c] * gj[c] + gi[c] * sj[c];
            }
            row += u;
        }
        total += row;
    }
    Ok(total / (n * n) as f64)
}

/// Per-iteration diagnostics of a transport step.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRow {
    /// 0-based iteration index of the step that produced this row.
    pub iteration: usize,
    /// Mean over particles of the l2 norm of the combined direction phi.
    pub mean_grad_norm: f64,
    /// Mean over particles of the l2 norm of the repulsive component.
    pub mean_repulsive_norm: f64,
    /// Bandwidth used for this step.
    pub bandwidth: f64,
    /// V-statistic KSD of the post-step ensemble, when tracking is enabled.
    pub ksd_v: Option<f64>,
}

/// Result of a single transport step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub ensemble: ParticleEnsemble,
    pub diagnostics: DiagnosticsRow,
}

/// Result of a full SVGD run.
#[derive(Clone, Debug)]
pub struct SvgdResult {
    pub ensemble: ParticleEnsemble,
    /// One row per iteration.
    pub diagnostics: Vec<DiagnosticsRow>,
    /// `(iteration, ensemble)` snapshots: with `record_every = 0` only the
    /// final ensemble; otherwise the initial ensemble (iteration 0), every
    /// `record_every`-th post-step ensemble, and the final ensemble.
    pub snapshots: Vec<(usize, ParticleEnsemble)>,
}

enum BatchDraw {
    None,
    Shared(Vec<usize>),
    PerParticle(Vec<Vec<usize>>),
}

fn fill_scores(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    draw: &BatchDraw,
    scores: &mut [f64],
) {
    let d = ensemble.d();
    let row_score = |i: usize, out: &mut [f64]| match draw {
        BatchDraw::None => target.score(ensemble.particle(i), out),
        BatchDraw::Shared(batch) => target.batch_score(ensemble.particle(i), batch, out),
        BatchDraw::PerParticle(batches) => {
            target.batch_score(ensemble.particle(i), &batches[i], out)
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scores
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, row)| row_score(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in scores.chunks_mut(d).enumerate() {
            row_score(i, row);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn step_impl(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    selector: &mut BandwidthSelector,
    state: &mut ScheduleState,
    iteration: usize,
    batches: Option<&mut BatchSchedule>,
    batch_per_particle: bool,
    track_ksd: bool,
) -> Result<StepOutcome> {
    let n = ensemble.n();
    let d = ensemble.d();
    if target.dim() != d {
        return Err(SteinError::invalid(format!(
            "svgd step: target dimension {} != ensemble dimension {d}",
            target.dim()
        )));
    }
    // Minibatch indices are drawn from the run's stream before fanning out to
    // worker threads, so parallel score evaluation stays deterministic.
    let draw = match batches {
        None => BatchDraw::None,
        Some(schedule) => {
            if batch_per_particle {
                BatchDraw::PerParticle((0..n).map(|_| schedule.next_batch()).collect())
            } else {
                BatchDraw::Shared(schedule.next_batch())
            }
        }
    };
    let mut scores = vec![0.0; n * d];
    fill_scores(ensemble, target, &draw, &mut scores);
    if let Some(bad) = scores.iter().position(|v| !v.is_finite()) {
        return Err(SteinError::NonFinite(format!(
            "score for particle {} at iteration {iteration} is not finite",
            bad / d
        )));
    }

    let h = selector.select(ensemble);
    let kernel = RbfKernel::new(h)?;
    let direction = svgd_direction(ensemble, &scores, &kernel)?;

    let mut step = vec![0.0; n * d];
    state.step(iteration, &direction.combined, &mut step)?;

    let mut data = ensemble.data().to_vec();
    for (x, s) in data.iter_mut().zip(&step) {
        *x += s;
    }
    let next = ParticleEnsemble::new(n, d, data).map_err(|e| match e {
        SteinError::NonFinite(msg) => {
            SteinError::NonFinite(format!("iteration {iteration}: {msg}"))
        }
        other => other,
    })?;

    let mean_norm = |rows: &[f64]| {
        rows.chunks_exact(d)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            / n as f64
    };
    let ksd_v = if track_ksd {
        Some(ksd::ksd_squared(&next, target, &kernel, ksd::KsdEstimator::VStatistic)?.value)
    } else {
        None
    };
    Ok(StepOutcome {
        ensemble: next,
        diagnostics: DiagnosticsRow {
            iteration,
            mean_grad_norm: mean_norm(&direction.combined),
            mean_repulsive_norm: mean_norm(&direction.repulsive),
            bandwidth: h,
            ksd_v,
        },
    })
}

/// One transport step from the given snapshot. Evaluates all n scores (with
/// one shared minibatch draw from `batches` if the target is stochastic),
/// selects the bandwidth per policy, forms the direction, and applies the
/// schedule. The input ensemble is left unmodified.
pub fn svgd_step(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    selector: &mut BandwidthSelector,
    state: &mut ScheduleState,
    iteration: usize,
    batches: Option<&mut BatchSchedule>,
) -> Result<StepOutcome> {
    step_impl(
        ensemble, target, selector, state, iteration, batches, false, false,
    )
}

/// The full SVGD loop: `config.iterations` transport steps from `init`.
/// Deterministic given `(config, init)`; the only randomness is the minibatch
/// schedule seeded by `config.seed` on stream [`streams::BATCH`].
pub fn run_svgd(
    config: &SvgdConfig,
    target: &dyn TargetDensity,
    init: &ParticleEnsemble,
) -> Result<SvgdResult> {
    config.validate()?;
    if target.dim() != init.d() {
        return Err(SteinError::invalid(format!(
            "svgd: target dimension {} != ensemble dimension {}",
            target.dim(),
            init.d()
        )));
    }
    let mut selector = BandwidthSelector::new(config.bandwidth)?;
    let mut state = ScheduleState::new(config.schedule.clone())?;
    let mut batches = match target.minibatch() {
        Some(spec) => Some(BatchSchedule::new(
            spec.num_data,
            spec.batch_size,
            RngStream::new(config.seed, streams::BATCH),
        )?),
        None => None,
    };

    let mut current = init.clone();
    let mut diagnostics = Vec::with_capacity(config.iterations);
    let mut snapshots = Vec::new();
    if config.record_every > 0 {
        snapshots.push((0, current.clone()));
    }
    for t in 0..config.iterations {
        let outcome = step_impl(
            &current,
            target,
            &mut selector,
            &mut state,
            t,
            batches.as_mut(),
            config.batch_per_particle,
            config.track_ksd,
        )?;
        current = outcome.ensemble;
        diagnostics.push(outcome.diagnostics);
        let done = t + 1;
        if config.record_every > 0 && done % config.record_every == 0 && done != config.iterations
        {
            snapshots.push((done, current.clone()));
        }
    }
    snapshots.push((config.iterations, current.clone()));
    Ok(SvgdResult {
        ensemble: current,
        diagnostics,
        snapshots,
    })
}
