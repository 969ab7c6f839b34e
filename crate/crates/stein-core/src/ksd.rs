//! Kernelized Stein discrepancy estimation and numerical verification of the
//! identities behind SVGD.
//!
//! The discrepancy between an ensemble `q` (empirical) and a target `p` is
//! estimated through pairwise sums of the Stein kernel
//!
//! ```text
//! u_p(x, x') = s(x)·s(x') k(x,x') + s(x)·grad_{x'} k + grad_x k·s(x')
//!              + trace(grad_x grad_{x'} k)
//! ```
//!
//! with `s = grad log p`. The V-statistic `(1/n^2) sum_ij u_p(x_i, x_j)` is a
//! squared RKHS norm (hence >= 0, and identical to the squared norm of the
//! SVGD direction); the U-statistic drops the diagonal and is unbiased but
//! may go negative.
//!
//! The theory checks in this module validate, numerically: that perturbing a
//! Gaussian `q` along a direction `phi` changes `KL(q || p)` at the rate
//! `-E_q[s_p·phi + phi']` (finite differences of quadrature KL values against
//! the quadrature expectation), and that choosing `phi` as the score
//! difference recovers the negative Fisher divergence (Monte Carlo against
//! the closed form).

use crate::ensemble::ParticleEnsemble;
use crate::error::{Result, SteinError};
use crate::kernels::RbfKernel;
use crate::quadrature::{integrate_doubling, simpson_fixed};
use crate::rng::RngStream;
use crate::target::TargetDensity;

/// Which pairwise estimator a [`KsdEstimate`] used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsdEstimator {
    /// `(1/(n(n-1))) sum_{i != j} u_p(x_i, x_j)` — unbiased, may be negative.
    UStatistic,
    /// `(1/n^2) sum_{i,j} u_p(x_i, x_j)` — nonnegative, biased upward.
    VStatistic,
}

/// A scalar KSD estimate together with how it was computed.
#[derive(Clone, Copy, Debug)]
pub struct KsdEstimate {
    pub value: f64,
    pub estimator: KsdEstimator,
    pub n: usize,
}

/// `trace(A_p phi)(x) = score·phi + div phi` for a single point.
pub fn stein_operator_trace(score: &[f64], phi: &[f64], div_phi: f64) -> f64 {
    debug_assert_eq!(score.len(), phi.len());
    let mut acc = div_phi;
    for (s, p) in score.iter().zip(phi) {
        acc += s * p;
    }
    acc
}

/// Monte Carlo check of Stein's identity `E_p[trace(A_p phi)] = 0`.
///
/// `phi` writes `phi(x)` into its output slice and returns the divergence
/// `div phi(x)`. Draws `m >= 100` exact samples from the target (which must
/// provide a sampler) and returns the sample mean and its standard error.
pub fn stein_identity_residual(
    target: &dyn TargetDensity,
    phi: &dyn Fn(&[f64], &mut [f64]) -> f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if m < 100 {
        return Err(SteinError::invalid(format!(
            "stein identity residual: need m >= 100 samples, got {m}"
        )));
    }
    if !target.can_sample() {
        return Err(SteinError::Unsupported(
            "stein identity residual requires a target with an exact sampler".into(),
        ));
    }
    let d = target.dim();
    let mut x = vec![0.0; d];
    let mut score = vec![0.0; d];
    let mut phi_val = vec![0.0; d];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..m {
        target.sample_into(rng, &mut x);
        target.score(&x, &mut score);
        let div = phi(&x, &mut phi_val);
        let value = stein_operator_trace(&score, &phi_val, div);
        // Welford update.
        let delta = value - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (value - mean);
    }
    let var = m2 / (m - 1) as f64;
    Ok((mean, (var / m as f64).sqrt()))
}

/// One Stein-kernel entry `u_p(x_i, x_j)`, fused so that row sums are cheap.
/// Shared by the estimators and by [`stein_kernel_matrix`] so the two agree
/// bitwise.
#[inline]
fn u_p_entry(xi: &[f64], si: &[f64], xj: &[f64], sj: &[f64], h: f64) -> f64 {
    let d = xi.len();
    let mut sq = 0.0;
    let mut dot_ss = 0.0;
    let mut cross = 0.0; // sum_c (xi - xj)_c (si - sj)_c
    for c in 0..d {
        let diff = xi[c] - xj[c];
        sq += diff * diff;
        dot_ss += si[c] * sj[c];
        cross += diff * (si[c] - sj[c]);
    }
    let k = (-sq / h).exp();
    // s_i·grad_{x_j} k = (2/h) k (x_i - x_j)·s_i and
    // grad_{x_i} k·s_j = -(2/h) k (x_i - x_j)·s_j combine into the `cross`
    // term; the mixed trace is k (2d/h - (4/h^2) ||x_i - x_j||^2).
    k * (dot_ss + 2.0 / h * cross + 2.0 * d as f64 / h - 4.0 / (h * h) * sq)
}

/// Full row sum and diagonal entry of the Stein kernel for row i, summed over
/// j in index order.
fn stein_row(i: usize, ensemble: &ParticleEnsemble, scores: &[f64], h: f64) -> (f64, f64) {
    let n = ensemble.n();
    let d = ensemble.d();
    let xi = ensemble.particle(i);
    let si = &scores[i * d..(i + 1) * d];
    let mut row = 0.0;
    let mut diag = 0.0;
    for j in 0..n {
        let xj = ensemble.particle(j);
        let sj = &scores[j * d..(j + 1) * d];
        let u = u_p_entry(xi, si, xj, sj, h);
        row += u;
        if j == i {
            diag = u;
        }
    }
    (row, diag)
}

fn full_scores(ensemble: &ParticleEnsemble, target: &dyn TargetDensity) -> Result<Vec<f64>> {
    let n = ensemble.n();
    let d = ensemble.d();
    if target.dim() != d {
        return Err(SteinError::invalid(format!(
            "ksd: target dimension {} != ensemble dimension {d}",
            target.dim()
        )));
    }
    let mut scores = vec![0.0; n * d];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scores
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(i, row)| target.score(ensemble.particle(i), row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in scores.chunks_mut(d).enumerate() {
            target.score(ensemble.particle(i), row);
        }
    }
    if let Some(bad) = scores.iter().position(|v| !v.is_finite()) {
        return Err(SteinError::NonFinite(format!(
            "ksd: score for particle {} is not finite",
            bad / d
        )));
    }
    Ok(scores)
}

fn assemble_estimate(
    rows: &[(f64, f64)],
    estimator: KsdEstimator,
    n: usize,
) -> Result<KsdEstimate> {
    let value = match estimator {
        KsdEstimator::VStatistic => {
            let mut total = 0.0;
            for (row, _) in rows {
                total += row;
            }
            total / (n * n) as f64
        }
        KsdEstimator::UStatistic => {
            if n < 2 {
                return Err(SteinError::invalid(
                    "ksd: the U-statistic needs at least 2 particles",
                ));
            }
            let mut total = 0.0;
            let mut diag = 0.0;
            for (row, dii) in rows {
                total += row;
                diag += dii;
            }
            (total - diag) / (n * (n - 1)) as f64
        }
    };
    Ok(KsdEstimate {
        value,
        estimator,
        n,
    })
}

/// Sequential reference implementation of [`ksd_squared`].
pub fn ksd_squared_seq(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    kernel: &RbfKernel,
    estimator: KsdEstimator,
) -> Result<KsdEstimate> {
    let scores = full_scores(ensemble, target)?;
    let h = kernel.bandwidth();
    let rows: Vec<(f64, f64)> = (0..ensemble.n())
        .map(|i| stein_row(i, ensemble, &scores, h))
        .collect();
    assemble_estimate(&rows, estimator, ensemble.n())
}

/// Pairwise KSD estimate of the ensemble against the target. Parallelized
/// over rows when the `parallel` feature is enabled; row sums keep a fixed
/// inner order and the final reduction runs in row order, so the value is
/// bitwise identical to [`ksd_squared_seq`].
pub fn ksd_squared(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    kernel: &RbfKernel,
    estimator: KsdEstimator,
) -> Result<KsdEstimate> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let scores = full_scores(ensemble, target)?;
        let h = kernel.bandwidth();
        let rows: Vec<(f64, f64)> = (0..ensemble.n())
            .into_par_iter()
            .map(|i| stein_row(i, ensemble, &scores, h))
            .collect();
        assemble_estimate(&rows, estimator, ensemble.n())
    }
    #[cfg(not(feature = "parallel"))]
    {
        ksd_squared_seq(ensemble, target, kernel, estimator)
    }
}

/// The dense n x n Stein kernel matrix `u_p(x_i, x_j)` (row-major). Row sums
/// of this matrix agree bitwise with the estimator internals.
pub fn stein_kernel_matrix(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    kernel: &RbfKernel,
) -> Result<Vec<f64>> {
    let scores = full_scores(ensemble, target)?;
    let n = ensemble.n();
    let d = ensemble.d();
    let h = kernel.bandwidth();
    let mut matrix = vec![0.0; n * n];
    let fill_row = |i: usize, out: &mut [f64]| {
        let xi = ensemble.particle(i);
        let si = &scores[i * d..(i + 1) * d];
        for j in 0..n {
            let xj = ensemble.particle(j);
            let sj = &scores[j * d..(j + 1) * d];
            out[j] = u_p_entry(xi, si, xj, sj, h);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        matrix
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| fill_row(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in matrix.chunks_mut(n).enumerate() {
            fill_row(i, row);
        }
    }
    Ok(matrix)
}

/// U-statistic KSD with a bootstrap standard error: resamples the particle
/// indices with replacement `replicates` times and reports the standard
/// deviation of the resampled U-statistics.
///
/// Returns `(estimate, standard error)`.
pub fn ksd_u_bootstrap(
    ensemble: &ParticleEnsemble,
    target: &dyn TargetDensity,
    kernel: &RbfKernel,
    replicates: usize,
    rng: &mut RngStream,
) -> Result<(KsdEstimate, f64)> {
    let n = ensemble.n();
    if n < 2 {
        return Err(SteinError::invalid(
            "ksd bootstrap: need at least 2 particles",
        ));
    }
    if replicates < 2 {
        return Err(SteinError::invalid(
            "ksd bootstrap: need at least 2 replicates",
        ));
    }
    let matrix = stein_kernel_matrix(ensemble, target, kernel)?;
    // Point estimate from the matrix row sums (identical arithmetic to
    // ksd_squared's U-statistic).
    let mut total = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += matrix[i * n + j];
        }
        total += row;
        diag += matrix[i * n + i];
    }
    let point = (total - diag) / (n * (n - 1)) as f64;

    // A resample with multiplicities c gives
    //   sum_{a != b} u[r_a][r_b] = c' M c - sum_i c_i M_ii,
    // which is O(n^2) per replicate instead of materializing the resample.
    let mut counts = vec![0usize; n];
    let mut values = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        counts.fill(0);
        for _ in 0..n {
            counts[rng.below(n)] += 1;
        }
        let mut quad = 0.0;
        let mut self_pairs = 0.0;
        for i in 0..n {
            if counts[i] == 0 {
                continue;
            }
            let ci = counts[i] as f64;
            let mut row = 0.0;
            for j in 0..n {
                if counts[j] > 0 {
                    row += matrix[i * n + j] * counts[j] as f64;
                }
            }
            quad += ci * row;
            self_pairs += ci * matrix[i * n + i];
        }
        values.push((quad - self_pairs) / (n * (n - 1)) as f64);
    }
    let mean = values.iter().sum::<f64>() / replicates as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (replicates - 1) as f64;
    Ok((
        KsdEstimate {
            value: point,
            estimator: KsdEstimator::UStatistic,
            n,
        },
        var.sqrt(),
    ))
}

/// A 1D Gaussian, parameterized by mean and variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian1d {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian1d {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
            return Err(SteinError::invalid(format!(
                "gaussian: need finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Ok(Gaussian1d { mean, var })
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * self.var).ln() - z * z / (2.0 * self.var)
    }

    pub fn score(&self, x: f64) -> f64 {
        -(x - self.mean) / self.var
    }
}

/// Result of a numerical theory check: an analytic value, an independently
/// computed numeric one, and their discrepancy. The relative error is
/// measured against `max(1, |analytic|)` so checks of zero-valued quantities
/// stay meaningful.
#[derive(Clone, Copy, Debug)]
pub struct TheoryCheckReport {
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// Standard error of the numeric side, when it is a Monte Carlo mean.
    pub numeric_se: Option<f64>,
    /// Quadrature node count, when quadrature was involved.
    pub quadrature_nodes: Option<usize>,
    /// Finite-difference step on the perturbation scale, when used.
    pub fd_step: Option<f64>,
}

impl TheoryCheckReport {
    fn new(analytic: f64, numeric: f64) -> Self {
        let abs_error = (analytic - numeric).abs();
        TheoryCheckReport {
            analytic,
            numeric,
            abs_error,
            rel_error: abs_error / analytic.abs().max(1.0),
            numeric_se: None,
            quadrature_nodes: None,
            fd_step: None,
        }
    }
}

/// Closed-form Fisher divergence between 1D Gaussians,
/// `F(q, p) = E_q[(score_p(x) - score_q(x))^2]`.
///
/// The score difference is affine: `score_p - score_q = a x + b` with
/// `a = 1/v_q - 1/v_p` and `b = m_p/v_p - m_q/v_q`, so expanding the square
/// under `q` gives `F = a^2 (m_q^2 + v_q) + 2 a b m_q + b^2`.
pub fn fisher_divergence_gaussian(q: Gaussian1d, p: Gaussian1d) -> Result<f64> {
    // Constructors validate, but accept raw structs too.
    let q = Gaussian1d::new(q.mean, q.var)?;
    let p = Gaussian1d::new(p.mean, p.var)?;
    let a = 1.0 / q.var - 1.0 / p.var;
    let b = p.mean / p.var - q.mean / q.var;
    Ok(a * a * (q.mean * q.mean + q.var) + 2.0 * a * b * q.mean + b * b)
}

/// Monte Carlo check that perturbing `q` along `phi = score_p - score_q`
/// drives KL down at exactly the Fisher divergence rate:
/// `-E_q[trace(A_p phi)] = -F(q, p)`.
///
/// The analytic side is the closed form; the numeric side averages
/// `score_p(x) phi(x) + phi'(x)` over `m >= 1000` draws from `q`.
pub fn fisher_identity_check(
    q: Gaussian1d,
    p: Gaussian1d,
    m: usize,
    rng: &mut RngStream,
) -> Result<TheoryCheckReport> {
    if m < 1000 {
        return Err(SteinError::invalid(format!(
            "fisher identity check: need m >= 1000 samples, got {m}"
        )));
    }
    let analytic = -fisher_divergence_gaussian(q, p)?;
    let a = 1.0 / q.var - 1.0 / p.var;
    let b = p.mean / p.var - q.mean / q.var;
    let sd = q.var.sqrt();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..m {
        let x = q.mean + sd * rng.standard_normal();
        let phi = a * x + b;
        let value = -(p.score(x) * phi + a);
        let delta = value - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (value - mean);
    }
    let se = (m2 / (m - 1) as f64 / m as f64).sqrt();
    let mut report = TheoryCheckReport::new(analytic, mean);
    report.numeric_se = Some(se);
    Ok(report)
}

const QUAD_TOL: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 24;
/// Integration range half-width in standard deviations of q.
const RANGE_SIGMAS: f64 = 10.0;

/// Numerical check of the KL perturbation derivative: transporting
/// `x -> x + eps*phi(x)` with `x ~ q` changes `KL(q_eps || p)` at rate
/// `-E_q[score_p(x) phi(x) + phi'(x)]` at `eps = 0`.
///
/// * numeric side: 5-point central finite difference (step `fd_step`) of
///   `KL(eps) = E_q[log q(x) - log|1 + eps phi'(x)| - log p(x + eps phi(x))]`
///   — the change-of-variables density of the transported measure — with each
///   KL value computed by Simpson quadrature on a shared converged grid over
///   `q.mean ± 10 sd`. The normalization of `p` drops out of the difference.
/// * analytic side: adaptive quadrature of `-q(x)[score_p(x) phi(x) + phi'(x)]`.
///
/// `log_p` may be unnormalized. Quadrature starts at `min_nodes` nodes and
/// doubles until successive values agree to 1e-8.
pub fn kl_perturbation_gradient_check(
    q: Gaussian1d,
    log_p: &dyn Fn(f64) -> f64,
    score_p: &dyn Fn(f64) -> f64,
    phi: &dyn Fn(f64) -> f64,
    dphi: &dyn Fn(f64) -> f64,
    fd_step: f64,
    min_nodes: usize,
) -> Result<TheoryCheckReport> {
    if !(fd_step > 0.0) || !fd_step.is_finite() {
        return Err(SteinError::invalid(format!(
            "kl check: fd step must be positive and finite, got {fd_step}"
        )));
    }
    let q = Gaussian1d::new(q.mean, q.var)?;
    let sd = q.var.sqrt();
    let (lo, hi) = (q.mean - RANGE_SIGMAS * sd, q.mean + RANGE_SIGMAS * sd);
    let q_pdf = |x: f64| q.log_density(x).exp();

    // Analytic side: -E_q[score_p phi + phi'].
    let analytic_integrand = |x: f64| q_pdf(x) * (score_p(x) * phi(x) + dphi(x));
    let analytic_out = integrate_doubling(
        &analytic_integrand,
        lo,
        hi,
        min_nodes.saturating_sub(1),
        QUAD_TOL,
        MAX_DOUBLINGS,
    )?;
    let analytic = -analytic_out.value;

    // KL(eps) under the transported density; the same quadrature grid is used
    // for every stencil point so grid error cancels in the difference.
    let kl_integrand = move |eps: f64| {
        move |x: f64| {
            let jac: f64 = 1.0 + eps * dphi(x);
            q_pdf(x) * (q.log_density(x) - jac.abs().ln() - log_p(x + eps * phi(x)))
        }
    };
    let baseline = integrate_doubling(
        &kl_integrand(0.0),
        lo,
        hi,
        min_nodes.saturating_sub(1),
        QUAD_TOL,
        MAX_DOUBLINGS,
    )?;
    let intervals = baseline.nodes - 1;

    // Validity of the perturbation: the transform must stay orientation
    // preserving across the stencil range.
    let grid_h = (hi - lo) / intervals as f64;
    for step in [-2.0 * fd_step, -fd_step, fd_step, 2.0 * fd_step] {
        for i in 0..=intervals {
            let x = lo + grid_h * i as f64;
            if 1.0 + step * dphi(x) <= 0.0 {
                return Err(SteinError::invalid(format!(
                    "kl check: fd step {fd_step} too large, 1 + eps*phi'(x) <= 0 at x = {x}"
                )));
            }
        }
    }

    let kl_at = |eps: f64| simpson_fixed(&kl_integrand(eps), lo, hi, intervals);
    let numeric = (kl_at(-2.0 * fd_step) - 8.0 * kl_at(-fd_step) + 8.0 * kl_at(fd_step)
        - kl_at(2.0 * fd_step))
        / (12.0 * fd_step);

    let mut report = TheoryCheckReport::new(analytic, numeric);
    report.quadrature_nodes = Some(analytic_out.nodes.max(baseline.nodes));
    report.fd_step = Some(fd_step);
    Ok(report)
}
