//! The target-density interface consumed by SVGD, KSD, and the baselines.

use crate::rng::RngStream;

/// Size information for targets whose score is a minibatch estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinibatchSpec {
    /// Total number of data terms N in the likelihood.
    pub num_data: usize,
    /// Minibatch size |Omega|.
    pub batch_size: usize,
}

/// An unnormalized target density p(x) ~ p_bar(x) / Z on R^d.
///
/// Implementations only ever evaluate quantities that are independent of the
/// normalization constant Z: the score `grad log p_bar` and (optionally)
/// `log p_bar` itself. Score evaluation must be deterministic given the point
/// and, for minibatch targets, the batch indices — all randomness stays with
/// the caller.
pub trait TargetDensity: Sync {
    /// Dimension of the support.
    fn dim(&self) -> usize;

    /// Full-data score: writes `grad_x log p_bar(x)` into `out`.
    ///
    /// `x` and `out` have length `dim()`.
    fn score(&self, x: &[f64], out: &mut [f64]);

    /// Minibatch score estimate over the given data indices. Targets without
    /// a likelihood decomposition ignore `batch` and return the exact score.
    fn batch_score(&self, x: &[f64], batch: &[usize], out: &mut [f64]) {
        let _ = batch;
        self.score(x, out);
    }

    /// `log p_bar(x)` when the target can evaluate it.
    fn log_unnorm_density(&self, x: &[f64]) -> Option<f64> {
        let _ = x;
        None
    }

    /// Present iff the score is a stochastic minibatch estimate; callers use
    /// it to drive a batch schedule.
    fn minibatch(&self) -> Option<MinibatchSpec> {
        None
    }

    /// Whether the score is a minibatch estimate rather than exact.
    fn stochastic(&self) -> bool {
        self.minibatch().is_some()
    }

    /// Whether [`TargetDensity::sample_into`] is available.
    fn can_sample(&self) -> bool {
        false
    }

    /// Draw one exact sample from the (normalized) target. Only invoked when
    /// `can_sample()` returns true.
    fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        let _ = (rng, out);
        unreachable!("sample_into called on a target without an exact sampler");
    }
}
