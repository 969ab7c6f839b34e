//! Built-in target posteriors: diagonal Gaussian mixtures (with closed-form
//! moments and exact sampling, used for calibration) and the Bayesian
//! logistic regression posterior with a Gamma prior on the weight precision.

use rand_distr::{Distribution, Gamma};

use crate::diagnostics::TestFunctionSpec;
use crate::ensemble::ParticleEnsemble;
use crate::error::{Result, SteinError};
use crate::rng::RngStream;
use crate::target::{MinibatchSpec, TargetDensity};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mixture of diagonal-covariance Gaussians in `d` dimensions.
///
/// Weights are normalized at construction. Storage is row-major per
/// component: `means[k*d + c]`, `vars[k*d + c]`.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    d: usize,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
    /// Per-component log normalizer `-0.5 * sum_c ln(2 pi var_kc)`.
    log_norms: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(d: usize, weights: &[f64], means: &[f64], vars: &[f64]) -> Result<Self> {
        let k = weights.len();
        if d == 0 || k == 0 {
            return Err(SteinError::invalid(
                "gaussian mixture: need at least one component and one dimension",
            ));
        }
        if means.len() != k * d || vars.len() != k * d {
            return Err(SteinError::invalid(format!(
                "gaussian mixture: with {k} components in {d} dims expected {} means and \
                 variances, got {} and {}",
                k * d,
                means.len(),
                vars.len()
            )));
        }
        let mut total = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(SteinError::invalid(format!(
                    "gaussian mixture: weight {i} must be positive and finite, got {w}"
                )));
            }
            total += w;
        }
        for (i, &v) in vars.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(SteinError::invalid(format!(
                    "gaussian mixture: variance entry {i} must be positive and finite, got {v}"
                )));
            }
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(SteinError::invalid("gaussian mixture: non-finite mean"));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let log_norms = (0..k)
            .map(|comp| {
                -0.5 * vars[comp * d..(comp + 1) * d]
                    .iter()
                    .map(|v| LN_2PI + v.ln())
                    .sum::<f64>()
            })
            .collect();
        Ok(GaussianMixture {
            d,
            weights,
            log_weights,
            means: means.to_vec(),
            vars: vars.to_vec(),
            log_norms,
        })
    }

    /// One-dimensional mixture from parallel weight/mean/variance slices.
    pub fn univariate(weights: &[f64], means: &[f64], vars: &[f64]) -> Result<Self> {
        if means.len() != weights.len() || vars.len() != weights.len() {
            return Err(SteinError::invalid(format!(
                "gaussian mixture: got {} weights, {} means, {} variances",
                weights.len(),
                means.len(),
                vars.len()
            )));
        }
        GaussianMixture::new(1, weights, means, vars)
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized log density.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "point dimension mismatch");
        let mut best = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(self.weights.len());
        for comp in 0..self.weights.len() {
            let mut quad = 0.0;
            for c in 0..self.d {
                let z = x[c] - self.means[comp * self.d + c];
                quad += z * z / self.vars[comp * self.d + c];
            }
            let t = self.log_weights[comp] + self.log_norms[comp] - 0.5 * quad;
            best = best.max(t);
            terms.push(t);
        }
        // log-sum-exp, stable under widely separated components.
        best + terms.iter().map(|t| (t - best).exp()).sum::<f64>().ln()
    }

    /// Posterior responsibilities of each component at `x`.
    fn responsibilities(&self, x: &[f64], out: &mut [f64]) {
        let mut best = f64::NEG_INFINITY;
        for comp in 0..self.weights.len() {
            let mut quad = 0.0;
            for c in 0..self.d {
                let z = x[c] - self.means[comp * self.d + c];
                quad += z * z / self.vars[comp * self.d + c];
            }
            out[comp] = self.log_weights[comp] + self.log_norms[comp] - 0.5 * quad;
            best = best.max(out[comp]);
        }
        let mut total = 0.0;
        for r in out.iter_mut() {
            *r = (*r - best).exp();
            total += *r;
        }
        for r in out.iter_mut() {
            *r /= total;
        }
    }

    /// Closed-form expectation of a 1D test function under the mixture.
    /// `E[cos(w x + b)]` uses the Gaussian characteristic function,
    /// `E[cos(w x + b)] = sum_k pi_k exp(-w^2 v_k / 2) cos(w m_k + b)`.
    pub fn moment(&self, f: &TestFunctionSpec) -> Result<f64> {
        if self.d != 1 {
            return Err(SteinError::Unsupported(
                "closed-form moments are implemented for 1D mixtures only".into(),
            ));
        }
        let value = match *f {
            TestFunctionSpec::X => self
                .weights
                .iter()
                .zip(&self.means)
                .map(|(w, m)| w * m)
                .sum(),
            TestFunctionSpec::XSquared => self
                .weights
                .iter()
                .zip(self.means.iter().zip(&self.vars))
                .map(|(w, (m, v))| w * (m * m + v))
                .sum(),
            TestFunctionSpec::Cos { omega, offset } => self
                .weights
                .iter()
                .zip(self.means.iter().zip(&self.vars))
                .map(|(w, (m, v))| {
                    w * (-omega * omega * v / 2.0).exp() * (omega * m + offset).cos()
                })
                .sum(),
        };
        Ok(value)
    }
}

impl TargetDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.d
    }

    /// `grad log p(x) = sum_k r_k(x) * (-(x - m_k) / v_k)` with `r_k` the
    /// responsibilities.
    fn score(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.d, "point dimension mismatch");
        assert_eq!(out.len(), self.d, "output dimension mismatch");
        let k = self.weights.len();
        let mut resp = vec![0.0; k];
        self.responsibilities(x, &mut resp);
        for c in 0..self.d {
            let mut g = 0.0;
            for comp in 0..k {
                g += resp[comp] * (-(x[c] - self.means[comp * self.d + c])
                    / self.vars[comp * self.d + c]);
            }
            out[c] = g;
        }
    }

    fn log_unnorm_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.log_density(x))
    }

    fn can_sample(&self) -> bool {
        true
    }

    /// Exact ancestral sampling: one uniform picks the component by CDF
    /// inversion, then `d` standard normals are scaled and shifted.
    fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        assert_eq!(out.len(), self.d, "output dimension mismatch");
        let u = rng.uniform();
        let mut comp = self.weights.len() - 1;
        let mut cdf = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            cdf += w;
            if u < cdf {
                comp = i;
                break;
            }
        }
        for c in 0..self.d {
            out[c] = self.means[comp * self.d + c]
                + self.vars[comp * self.d + c].sqrt() * rng.standard_normal();
        }
    }
}

/// Append a constant-1 intercept column: `(n_rows, d)` row-major features in,
/// `(n_rows, d+1)` out.
pub fn augment_intercept(features: &[f64], n_rows: usize, d: usize) -> Result<Vec<f64>> {
    if features.len() != n_rows * d {
        return Err(SteinError::invalid(format!(
            "augment: feature buffer holds {} values, expected {n_rows} x {d}",
            features.len()
        )));
    }
    let mut out = Vec::with_capacity(n_rows * (d + 1));
    for row in features.chunks_exact(d) {
        out.extend_from_slice(row);
        out.push(1.0);
    }
    Ok(out)
}

/// Numerically stable logistic function.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln sigmoid(t)`.
pub fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// Bayesian logistic regression posterior over the augmented state
/// `[w_1..w_d, beta]` where `beta = ln alpha` and `alpha` is the precision of
/// the Gaussian prior on the weights; `alpha` itself carries a
/// `Gamma(shape, rate)` prior. The log-Jacobian of `alpha -> beta` is folded
/// into the density, so the state space is unconstrained.
///
/// Labels must be in `{-1, +1}`. Features are dense row-major and should
/// already include any intercept column (see [`augment_intercept`]).
#[derive(Clone, Debug)]
pub struct BlrPosterior {
    features: Vec<f64>,
    labels: Vec<f64>,
    n_data: usize,
    d_feat: usize,
    batch_size: usize,
    gamma_shape: f64,
    gamma_rate: f64,
}

impl BlrPosterior {
    pub const DEFAULT_GAMMA_SHAPE: f64 = 1.0;
    pub const DEFAULT_GAMMA_RATE: f64 = 0.01;

    /// `batch_size` controls the minibatch contract reported to samplers;
    /// pass `n_data` for full-batch gradients.
    pub fn new(
        features: Vec<f64>,
        labels: Vec<f64>,
        d_feat: usize,
        batch_size: usize,
    ) -> Result<Self> {
        let n_data = labels.len();
        if n_data == 0 || d_feat == 0 {
            return Err(SteinError::invalid(
                "blr: need at least one observation and one feature",
            ));
        }
        if features.len() != n_data * d_feat {
            return Err(SteinError::invalid(format!(
                "blr: feature buffer holds {} values, expected {n_data} x {d_feat}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(SteinError::invalid("blr: non-finite feature value"));
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(SteinError::invalid(format!(
                    "blr: label {i} must be -1 or +1, got {y}"
                )));
            }
        }
        if batch_size == 0 || batch_size > n_data {
            return Err(SteinError::invalid(format!(
                "blr: batch size must be in 1..={n_data}, got {batch_size}"
            )));
        }
        Ok(BlrPosterior {
            features,
            labels,
            n_data,
            d_feat,
            batch_size,
            gamma_shape: Self::DEFAULT_GAMMA_SHAPE,
            gamma_rate: Self::DEFAULT_GAMMA_RATE,
        })
    }

    pub fn with_gamma_prior(mut self, shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(SteinError::invalid(format!(
                "blr: gamma prior parameters must be positive and finite, got ({shape}, {rate})"
            )));
        }
        self.gamma_shape = shape;
        self.gamma_rate = rate;
        Ok(self)
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn d_feat(&self) -> usize {
        self.d_feat
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.features[k * self.d_feat..(k + 1) * self.d_feat]
    }

    /// Log posterior up to an additive constant, over the full data set.
    pub fn log_posterior(&self, state: &[f64]) -> f64 {
        assert_eq!(state.len(), self.d_feat + 1, "state dimension mismatch");
        let (w, beta) = (&state[..self.d_feat], state[self.d_feat]);
        let alpha = beta.exp();
        let norm_sq: f64 = w.iter().map(|v| v * v).sum();
        let mut ll = 0.0;
        for k in 0..self.n_data {
            let margin: f64 = self
                .row(k)
                .iter()
                .zip(w)
                .map(|(x, w)| x * w)
                .sum::<f64>()
                * self.labels[k];
            ll += log_sigmoid(margin);
        }
        // Gaussian prior on w given alpha, Gamma prior on alpha, plus the
        // alpha -> beta Jacobian (one extra `beta` absorbed into the
        // `gamma_shape * beta` term).
        ll + 0.5 * self.d_feat as f64 * beta - 0.5 * alpha * norm_sq + self.gamma_shape * beta
            - self.gamma_rate * alpha
    }

    /// Gradient of the log posterior restricted to the rows in `batch`, with
    /// the likelihood rescaled by `n_data / batch.len()`. The `beta`
    /// component does not touch the data, so it is identical across batches.
    pub fn grad_log_posterior(&self, state: &[f64], batch: &[usize], out: &mut [f64]) {
        assert_eq!(state.len(), self.d_feat + 1, "state dimension mismatch");
        assert_eq!(out.len(), self.d_feat + 1, "output dimension mismatch");
        assert!(!batch.is_empty(), "empty minibatch");
        let (w, beta) = (&state[..self.d_feat], state[self.d_feat]);
        let alpha = beta.exp();
        out.fill(0.0);
        for &k in batch {
            let xk = self.row(k);
            let yk = self.labels[k];
            let margin: f64 = xk.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() * yk;
            let weight = yk * sigmoid(-margin);
            for c in 0..self.d_feat {
                out[c] += weight * xk[c];
            }
        }
        let scale = self.n_data as f64 / batch.len() as f64;
        let mut norm_sq = 0.0;
        for c in 0..self.d_feat {
            out[c] = scale * out[c] - alpha * w[c];
            norm_sq += w[c] * w[c];
        }
        out[self.d_feat] = 0.5 * self.d_feat as f64 - 0.5 * alpha * norm_sq + self.gamma_shape
            - self.gamma_rate * alpha;
    }

    /// Draw `n` particles from the prior: `alpha ~ Gamma(shape, scale=1/rate)`,
    /// `w | alpha ~ N(0, 1/alpha)`, `beta = ln alpha`.
    pub fn prior_ensemble(&self, n: usize, rng: &mut RngStream) -> Result<ParticleEnsemble> {
        let gamma = Gamma::new(self.gamma_shape, 1.0 / self.gamma_rate)
            .map_err(|e| SteinError::invalid(format!("blr: gamma prior: {e}")))?;
        let d_state = self.d_feat + 1;
        let mut data = Vec::with_capacity(n * d_state);
        for _ in 0..n {
            let alpha: f64 = gamma.sample(rng);
            let sd = (1.0 / alpha).sqrt();
            for _ in 0..self.d_feat {
                data.push(sd * rng.standard_normal());
            }
            data.push(alpha.ln());
        }
        ParticleEnsemble::new(n, d_state, data)
    }

    /// Posterior-mean predictive probability of label +1 for each feature
    /// row: the average of `sigmoid(w_i . x)` over the ensemble.
    pub fn predictive_probs(
        &self,
        ensemble: &ParticleEnsemble,
        features: &[f64],
        n_rows: usize,
    ) -> Result<Vec<f64>> {
        if ensemble.d() != self.d_feat + 1 {
            return Err(SteinError::invalid(format!(
                "blr: ensemble dimension {} does not match state dimension {}",
                ensemble.d(),
                self.d_feat + 1
            )));
        }
        if features.len() != n_rows * self.d_feat {
            return Err(SteinError::invalid(format!(
                "blr: feature buffer holds {} values, expected {n_rows} x {}",
                features.len(),
                self.d_feat
            )));
        }
        let mut probs = Vec::with_capacity(n_rows);
        for row in features.chunks_exact(self.d_feat) {
            let mut acc = 0.0;
            for i in 0..ensemble.n() {
                let w = &ensemble.particle(i)[..self.d_feat];
                let logit: f64 = row.iter().zip(w).map(|(x, w)| x * w).sum();
                acc += sigmoid(logit);
            }
            probs.push(acc / ensemble.n() as f64);
        }
        Ok(probs)
    }
}

impl TargetDensity for BlrPosterior {
    fn dim(&self) -> usize {
        self.d_feat + 1
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        let all: Vec<usize> = (0..self.n_data).collect();
        self.grad_log_posterior(x, &all, out);
    }

    fn batch_score(&self, x: &[f64], batch: &[usize], out: &mut [f64]) {
        self.grad_log_posterior(x, batch, out);
    }

    fn log_unnorm_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.log_posterior(x))
    }

    fn minibatch(&self) -> Option<MinibatchSpec> {
        if self.batch_size < self.n_data {
            Some(MinibatchSpec {
                num_data: self.n_data,
                batch_size: self.batch_size,
            })
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::streams;
    use approx::assert_relative_eq;

    /// (1/3) N(-2,1) + (2/3) N(2,1).
    fn two_mode() -> GaussianMixture {
        GaussianMixture::univariate(&[1.0 / 3.0, 2.0 / 3.0], &[-2.0, 2.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn standard_normal_log_density() {
        let g = GaussianMixture::univariate(&[1.0], &[0.0], &[1.0]).unwrap();
        // ln(1/sqrt(2 pi)) with 1/sqrt(2 pi) = 0.3989422804014327.
        assert_relative_eq!(
            g.log_density(&[0.0]),
            0.398_942_280_401_432_7_f64.ln(),
            max_relative = 1e-15
        );
        let mut s = [0.0];
        g.score(&[1.5], &mut s);
        assert_eq!(s[0], -1.5);
    }

    #[test]
    fn two_mode_score_at_origin() {
        // Equal distance to both modes, so responsibilities equal the weights
        // and the score is (1/3)(-2) + (2/3)(+2) = 2/3.
        let g = two_mode();
        let mut s = [0.0];
        g.score(&[0.0], &mut s);
        assert_relative_eq!(s[0], 2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn two_mode_closed_form_moments() {
        let g = two_mode();
        assert_relative_eq!(
            g.moment(&TestFunctionSpec::X).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            g.moment(&TestFunctionSpec::XSquared).unwrap(),
            5.0,
            max_relative = 1e-15
        );
        // E[cos x] = e^{-1/2} [ (1/3) cos(-2) + (2/3) cos 2 ] = e^{-1/2} cos 2.
        assert_relative_eq!(
            g.moment(&TestFunctionSpec::Cos {
                omega: 1.0,
                offset: 0.0
            })
            .unwrap(),
            (-0.5_f64).exp() * 2.0_f64.cos(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn weights_normalize() {
        let a = two_mode();
        let b = GaussianMixture::univariate(&[2.0, 4.0], &[-2.0, 2.0], &[1.0, 1.0]).unwrap();
        for x in [-3.0, 0.0, 0.7, 2.5] {
            assert_relative_eq!(a.log_density(&[x]), b.log_density(&[x]), max_relative = 1e-14);
        }
        assert_relative_eq!(b.weights()[0], 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn mixture_validation() {
        assert!(GaussianMixture::univariate(&[], &[], &[]).is_err());
        assert!(GaussianMixture::univariate(&[1.0], &[0.0], &[0.0]).is_err());
        assert!(GaussianMixture::univariate(&[1.0, -1.0], &[0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(GaussianMixture::univariate(&[1.0], &[0.0, 1.0], &[1.0]).is_err());
        assert!(GaussianMixture::new(2, &[1.0], &[0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn sampler_matches_closed_form_moments() {
        let g = two_mode();
        let mut rng = RngStream::new(11, streams::INIT);
        let m = 100_000;
        let mut x = [0.0];
        let (mut sum, mut sum_sq, mut pos) = (0.0, 0.0, 0usize);
        for _ in 0..m {
            g.sample_into(&mut rng, &mut x);
            sum += x[0];
            sum_sq += x[0] * x[0];
            if x[0] > 0.0 {
                pos += 1;
            }
        }
        let mean = sum / m as f64;
        let second = sum_sq / m as f64;
        // Var[x] = 5 - 4/9; 5 standard errors.
        let se_mean = ((5.0 - 4.0 / 9.0) / m as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 5.0 * se_mean, "mean {mean}");
        assert!((second - 5.0).abs() < 0.15, "second moment {second}");
        let frac = pos as f64 / m as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.01, "positive fraction {frac}");
    }

    #[test]
    fn multivariate_score_is_componentwise_for_single_gaussian() {
        let g = GaussianMixture::new(3, &[1.0], &[1.0, -1.0, 0.5], &[1.0, 4.0, 0.25]).unwrap();
        let mut s = [0.0; 3];
        g.score(&[2.0, -3.0, 0.5], &mut s);
        assert_eq!(s[0], -1.0);
        assert_eq!(s[1], 0.5);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn intercept_augmentation() {
        let out = augment_intercept(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 1.0, 3.0, 4.0, 1.0]);
        assert!(augment_intercept(&[1.0], 2, 2).is_err());
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_relative_eq!(sigmoid(2.0), 0.880_797_077_977_882_4, max_relative = 1e-15);
        assert_relative_eq!(sigmoid(-2.0), 1.0 - 0.880_797_077_977_882_4, max_relative = 1e-14);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_relative_eq!(log_sigmoid(3.0), sigmoid(3.0).ln(), max_relative = 1e-14);
        assert_relative_eq!(log_sigmoid(-3.0), sigmoid(-3.0).ln(), max_relative = 1e-14);
        assert!(log_sigmoid(-800.0).is_finite());
    }

    fn small_blr() -> BlrPosterior {
        // 4 observations, 2 features (second is an intercept).
        let features = vec![0.5, 1.0, -1.2, 1.0, 2.0, 1.0, -0.3, 1.0];
        let labels = vec![1.0, -1.0, 1.0, -1.0];
        BlrPosterior::new(features, labels, 2, 4).unwrap()
    }

    #[test]
    fn blr_gradient_matches_finite_differences() {
        let blr = small_blr();
        let state = [0.3, -0.7, 0.2];
        let mut grad = [0.0; 3];
        blr.score(&state, &mut grad);
        let h = 1e-5;
        for c in 0..3 {
            let mut plus = state;
            let mut minus = state;
            plus[c] += h;
            minus[c] -= h;
            let fd = (blr.log_posterior(&plus) - blr.log_posterior(&minus)) / (2.0 * h);
            assert_relative_eq!(grad[c], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn blr_beta_gradient_ignores_batch() {
        let blr = BlrPosterior::new(
            vec![0.5, 1.0, -1.2, 1.0, 2.0, 1.0, -0.3, 1.0],
            vec![1.0, -1.0, 1.0, -1.0],
            2,
            1,
        )
        .unwrap();
        let state = [0.4, 0.1, -0.3];
        let mut full = [0.0; 3];
        blr.score(&state, &mut full);
        for k in 0..4 {
            let mut partial = [0.0; 3];
            blr.batch_score(&state, &[k], &mut partial);
            assert_eq!(partial[2], full[2]);
        }
    }

    #[test]
    fn blr_singleton_batches_average_to_full_gradient() {
        let blr = small_blr();
        let state = [0.3, -0.7, 0.2];
        let mut full = [0.0; 3];
        blr.score(&state, &mut full);
        let mut avg = [0.0; 3];
        for k in 0..4 {
            let mut g = [0.0; 3];
            blr.batch_score(&state, &[k], &mut g);
            for c in 0..3 {
                avg[c] += g[c] / 4.0;
            }
        }
        for c in 0..3 {
            assert_relative_eq!(avg[c], full[c], max_relative = 1e-12);
        }
    }

    #[test]
    fn blr_minibatch_contract() {
        let full = small_blr();
        assert!(full.minibatch().is_none());
        assert!(!full.stochastic());
        let stochastic = BlrPosterior::new(
            vec![0.5, 1.0, -1.2, 1.0, 2.0, 1.0, -0.3, 1.0],
            vec![1.0, -1.0, 1.0, -1.0],
            2,
            2,
        )
        .unwrap();
        let spec = stochastic.minibatch().unwrap();
        assert_eq!(spec.num_data, 4);
        assert_eq!(spec.batch_size, 2);
        assert_eq!(stochastic.dim(), 3);
    }

    #[test]
    fn blr_validation() {
        assert!(BlrPosterior::new(vec![], vec![], 1, 1).is_err());
        assert!(BlrPosterior::new(vec![1.0], vec![0.5], 1, 1).is_err()); // label not +-1
        assert!(BlrPosterior::new(vec![1.0], vec![1.0], 1, 2).is_err()); // batch too big
        assert!(BlrPosterior::new(vec![1.0, 2.0], vec![1.0], 2, 1).is_ok());
        assert!(BlrPosterior::new(vec![f64::NAN], vec![1.0], 1, 1).is_err());
        assert!(small_blr().with_gamma_prior(0.0, 1.0).is_err());
    }

    #[test]
    fn blr_prior_ensemble_is_deterministic_and_consistent() {
        let blr = small_blr();
        let a = blr
            .prior_ensemble(32, &mut RngStream::new(7, streams::INIT))
            .unwrap();
        let b = blr
            .prior_ensemble(32, &mut RngStream::new(7, streams::INIT))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 32);
        assert_eq!(a.d(), 3);
        // Gamma(1, scale 100) has mean 100; with alpha around that scale the
        // weights should be small. Sanity-check beta is a plausible log-alpha.
        for i in 0..a.n() {
            let beta = a.particle(i)[2];
            assert!(beta.is_finite());
            assert!(beta.exp() > 0.0);
        }
    }

    #[test]
    fn blr_predictive_single_particle_hand_value() {
        let blr = small_blr();
        // One particle with w = [2, 0]: p(+1 | x=[1, anything]) = sigmoid(2).
        let ens = ParticleEnsemble::new(1, 3, vec![2.0, 0.0, 0.0]).unwrap();
        let probs = blr.predictive_probs(&ens, &[1.0, 5.0], 1).unwrap();
        assert_eq!(probs.len(), 1);
        assert_relative_eq!(probs[0], 0.880_797_077_977_882_4, max_relative = 1e-15);
        // Averaging two symmetric particles gives exactly 0.5.
        let pair = ParticleEnsemble::new(2, 3, vec![2.0, 0.0, 0.0, -2.0, 0.0, 0.0]).unwrap();
        let p = blr.predictive_probs(&pair, &[1.0, 0.0], 1).unwrap();
        assert_relative_eq!(p[0], 0.5, max_relative = 1e-15);
    }
}
