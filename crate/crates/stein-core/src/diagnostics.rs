//! Expectation estimates against ground truth, 1D kernel density estimation,
//! and binary classification metrics.

use crate::ensemble::ParticleEnsemble;
use crate::error::{Result, SteinError};

/// Test functions whose expectations are tracked. The `cos` family
/// is `h(x) = cos(omega * x + offset)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunctionSpec {
    X,
    XSquared,
    Cos { omega: f64, offset: f64 },
}

impl TestFunctionSpec {
    pub fn evaluate(&self, x: f64) -> f64 {
        match *self {
            TestFunctionSpec::X => x,
            TestFunctionSpec::XSquared => x * x,
            TestFunctionSpec::Cos { omega, offset } => (omega * x + offset).cos(),
        }
    }

    /// Short name used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            TestFunctionSpec::X => "x",
            TestFunctionSpec::XSquared => "x^2",
            TestFunctionSpec::Cos { .. } => "cos",
        }
    }

    /// The three functions reported by the moment experiments.
    pub fn standard_set() -> [TestFunctionSpec; 3] {
        [
            TestFunctionSpec::X,
            TestFunctionSpec::XSquared,
            TestFunctionSpec::Cos {
                omega: 1.0,
                offset: 0.0,
            },
        ]
    }
}

/// `(1/n) sum_i h(x_i)` for a 1D ensemble.
pub fn estimate_expectation(ensemble: &ParticleEnsemble, f: &TestFunctionSpec) -> Result<f64> {
    if ensemble.d() != 1 {
        return Err(SteinError::invalid(format!(
            "expectation estimate: test functions are 1D, ensemble has d = {}",
            ensemble.d()
        )));
    }
    let sum: f64 = ensemble.data().iter().map(|&x| f.evaluate(x)).sum();
    Ok(sum / ensemble.n() as f64)
}

/// Mean squared error of per-trial estimates against the true value.
pub fn mse_over_trials(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(SteinError::invalid("mse: need at least one trial"));
    }
    let sum: f64 = estimates.iter().map(|e| (e - truth) * (e - truth)).sum();
    Ok(sum / estimates.len() as f64)
}

/// Bandwidth rule for [`kde_1d`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KdeBandwidth {
    /// `1.06 * sd * n^(-1/5)`, falling back to 1.0 when the sample standard
    /// deviation is degenerate (n < 2 or all points coincide).
    Silverman,
    Fixed(f64),
}

/// Gaussian kernel density estimate of 1D samples on a grid.
pub fn kde_1d(samples: &[f64], grid: &[f64], bandwidth: KdeBandwidth) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(SteinError::invalid("kde: need at least one sample"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(SteinError::invalid("kde: non-finite sample"));
    }
    let n = samples.len();
    let h = match bandwidth {
        KdeBandwidth::Fixed(h) => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(SteinError::invalid(format!(
                    "kde: fixed bandwidth must be positive and finite, got {h}"
                )));
            }
            h
        }
        KdeBandwidth::Silverman => {
            if n < 2 {
                1.0
            } else {
                let mean = samples.iter().sum::<f64>() / n as f64;
                let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                    / (n - 1) as f64;
                let sd = var.sqrt();
                if sd > 0.0 {
                    1.06 * sd * (n as f64).powf(-0.2)
                } else {
                    1.0
                }
            }
        }
    };
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            let mut acc = 0.0;
            for &x in samples {
                let z = (g - x) / h;
                acc += (-0.5 * z * z).exp();
            }
            acc * norm
        })
        .collect())
}

/// Accuracy and average log-likelihood of probabilistic binary predictions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub avg_log_likelihood: f64,
}

/// Probabilities are clipped into `[1e-12, 1 - 1e-12]` before taking logs so
/// a fully confident wrong prediction stays finite.
pub const PROB_CLIP: f64 = 1e-12;

/// Scores predicted probabilities of the label being +1 against labels in
/// `{-1, +1}`. Threshold 0.5 with ties predicted as +1.
pub fn classification_metrics(probs: &[f64], labels: &[f64]) -> Result<ClassificationMetrics> {
    if probs.len() != labels.len() {
        return Err(SteinError::invalid(format!(
            "classification metrics: {} probabilities vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(SteinError::invalid(
            "classification metrics: need at least one prediction",
        ));
    }
    let mut correct = 0usize;
    let mut ll = 0.0;
    for (i, (&p, &y)) in probs.iter().zip(labels).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(SteinError::invalid(format!(
                "classification metrics: probability {i} must lie in [0, 1], got {p}"
            )));
        }
        if y != 1.0 && y != -1.0 {
            return Err(SteinError::invalid(format!(
                "classification metrics: label {i} must be -1 or +1, got {y}"
            )));
        }
        let predicted = if p >= 0.5 { 1.0 } else { -1.0 };
        if predicted == y {
            correct += 1;
        }
        let p_label = if y == 1.0 { p } else { 1.0 - p };
        ll += p_label.clamp(PROB_CLIP, 1.0 - PROB_CLIP).ln();
    }
    Ok(ClassificationMetrics {
        accuracy: correct as f64 / probs.len() as f64,
        avg_log_likelihood: ll / probs.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ens(values: &[f64]) -> ParticleEnsemble {
        ParticleEnsemble::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn expectation_hand_values() {
        let e = ens(&[1.0, 2.0, 3.0]);
        assert_eq!(estimate_expectation(&e, &TestFunctionSpec::X).unwrap(), 2.0);
        assert_relative_eq!(
            estimate_expectation(&e, &TestFunctionSpec::XSquared).unwrap(),
            14.0 / 3.0,
            max_relative = 1e-15
        );
        // cos(0*x + 0) = 1 regardless of the particles.
        assert_eq!(
            estimate_expectation(
                &e,
                &TestFunctionSpec::Cos {
                    omega: 0.0,
                    offset: 0.0
                }
            )
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn expectation_rejects_multivariate_ensembles() {
        let e = ParticleEnsemble::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(estimate_expectation(&e, &TestFunctionSpec::X).is_err());
    }

    #[test]
    fn expectation_is_permutation_invariant_and_linear() {
        let a = ens(&[0.4, -1.1, 2.2]);
        let b = ens(&[2.2, 0.4, -1.1]);
        for f in TestFunctionSpec::standard_set() {
            assert_relative_eq!(
                estimate_expectation(&a, &f).unwrap(),
                estimate_expectation(&b, &f).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn mse_hand_values() {
        assert_relative_eq!(
            mse_over_trials(&[0.5, 0.9], 0.7).unwrap(),
            0.04,
            max_relative = 1e-12
        );
        assert_eq!(mse_over_trials(&[0.7, 0.7, 0.7], 0.7).unwrap(), 0.0);
        assert_relative_eq!(
            mse_over_trials(&[1.5], 1.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        assert!(mse_over_trials(&[], 0.0).is_err());
    }

    #[test]
    fn kde_single_particle_hand_value() {
        let d = kde_1d(&[0.0], &[0.0], KdeBandwidth::Fixed(1.0)).unwrap();
        // 1/sqrt(2 pi) = 0.3989422804014327.
        assert_relative_eq!(d[0], 0.398_942_280_401_432_7, max_relative = 1e-15);
    }

    #[test]
    fn kde_integrates_to_one() {
        let samples = [-2.0, -1.5, 0.3, 2.0, 2.2, 2.4];
        let step = 0.01;
        let grid: Vec<f64> = (0..=4000).map(|i| -20.0 + step * i as f64).collect();
        for bw in [KdeBandwidth::Silverman, KdeBandwidth::Fixed(0.7)] {
            let d = kde_1d(&samples, &grid, bw).unwrap();
            // Trapezoid rule.
            let mut mass = 0.0;
            for i in 1..d.len() {
                mass += 0.5 * (d[i - 1] + d[i]) * step;
            }
            assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
        }
    }

    #[test]
    fn kde_translation_equivariance() {
        let samples = [-1.0, 0.2, 0.9, 3.0];
        let grid = [-2.0, 0.0, 1.5];
        let c = 7.25;
        let shifted_samples: Vec<f64> = samples.iter().map(|x| x + c).collect();
        let shifted_grid: Vec<f64> = grid.iter().map(|g| g + c).collect();
        let base = kde_1d(&samples, &grid, KdeBandwidth::Fixed(0.8)).unwrap();
        let moved = kde_1d(&shifted_samples, &shifted_grid, KdeBandwidth::Fixed(0.8)).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
        let base_s = kde_1d(&samples, &grid, KdeBandwidth::Silverman).unwrap();
        let moved_s = kde_1d(&shifted_samples, &shifted_grid, KdeBandwidth::Silverman).unwrap();
        for (a, b) in base_s.iter().zip(&moved_s) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn kde_degenerate_bandwidth_fallbacks() {
        // All points coincide: Silverman falls back to bandwidth 1, so the
        // value at the point is 1/sqrt(2 pi).
        let d = kde_1d(&[2.0, 2.0, 2.0], &[2.0], KdeBandwidth::Silverman).unwrap();
        assert_relative_eq!(d[0], 0.398_942_280_401_432_7, max_relative = 1e-15);
        assert!(kde_1d(&[0.0], &[0.0], KdeBandwidth::Fixed(0.0)).is_err());
        assert!(kde_1d(&[], &[0.0], KdeBandwidth::Silverman).is_err());
        assert!(kde_1d(&[f64::INFINITY], &[0.0], KdeBandwidth::Silverman).is_err());
    }

    #[test]
    fn classification_hand_values() {
        // log 0.9 = -0.1053605156578263.
        let m = classification_metrics(&[0.9], &[1.0]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_relative_eq!(
            m.avg_log_likelihood,
            -0.105_360_515_657_826_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn classification_uninformative_predictor() {
        // Ties at 0.5 count as +1; log 0.5 = -0.6931471805599453.
        let m = classification_metrics(&[0.5, 0.5, 0.5, 0.5], &[1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_relative_eq!(
            m.avg_log_likelihood,
            -0.693_147_180_559_945_3,
            max_relative = 1e-15
        );
    }

    #[test]
    fn classification_perfect_confident_predictor() {
        let m = classification_metrics(&[1.0, 0.0, 1.0], &[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.avg_log_likelihood <= 0.0);
        assert!(m.avg_log_likelihood > -1e-11, "clipped LL {}", m.avg_log_likelihood);
    }

    #[test]
    fn classification_validation() {
        assert!(classification_metrics(&[0.5], &[1.0, -1.0]).is_err());
        assert!(classification_metrics(&[], &[]).is_err());
        assert!(classification_metrics(&[1.5], &[1.0]).is_err());
        assert!(classification_metrics(&[0.5], &[0.0]).is_err());
    }
}
