//! Randomized invariants: estimator symmetries, parallel/sequential
//! agreement, minibatch unbiasedness, and the descent tendency of the
//! transport loop.

use proptest::prelude::*;

use stein_core::diagnostics::{estimate_expectation, TestFunctionSpec};
use stein_core::ensemble::ParticleEnsemble;
use stein_core::kernels::median_bandwidth;
use stein_core::ksd::{ksd_squared, ksd_squared_seq, KsdEstimator};
use stein_core::svgd::{
    run_svgd, svgd_direction, svgd_direction_seq, StepSchedule, SvgdConfig,
};
use stein_core::targets::{BlrPosterior, GaussianMixture};
use stein_core::{RbfKernel, TargetDensity};

fn two_mode() -> GaussianMixture {
    GaussianMixture::univariate(&[1.0, 2.0], &[-2.0, 2.0], &[1.0, 1.0]).unwrap()
}

fn mixture_for(d: usize) -> GaussianMixture {
    // Fixed two-component target in d dimensions: means +-1 on every
    // coordinate, unit-ish spreads.
    let means: Vec<f64> = (0..2 * d).map(|i| if i < d { -1.0 } else { 1.0 }).collect();
    let vars: Vec<f64> = (0..2 * d).map(|i| 0.5 + 0.25 * (i % 3) as f64).collect();
    GaussianMixture::new(d, &[0.4, 0.6], &means, &vars).unwrap()
}

fn scores_of(ens: &ParticleEnsemble, target: &dyn TargetDensity) -> Vec<f64> {
    let d = ens.d();
    let mut scores = vec![0.0; ens.n() * d];
    for i in 0..ens.n() {
        target.score(ens.particle(i), &mut scores[i * d..(i + 1) * d]);
    }
    scores
}

/// (n, d, row-major data) with n*d entries in a well-behaved range.
fn ensemble_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-5.0..5.0f64, n * d).prop_map(move |data| (n, d, data))
    })
}

fn permuted(ens: &ParticleEnsemble, perm: &[usize]) -> ParticleEnsemble {
    let d = ens.d();
    let mut data = Vec::with_capacity(ens.n() * d);
    for &i in perm {
        data.extend_from_slice(ens.particle(i));
    }
    ParticleEnsemble::new(ens.n(), d, data).unwrap()
}

/// A deterministic permutation that is nontrivial for n >= 2: rotate by one.
fn rotation(n: usize) -> Vec<usize> {
    (0..n).map(|i| (i + 1) % n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The V-statistic is a squared RKHS norm: nonnegative up to roundoff,
    /// and invariant under particle reordering.
    #[test]
    fn v_statistic_nonnegative_and_permutation_invariant(
        (n, d, data) in ensemble_strategy(16, 3),
        h in 0.5..4.0f64,
    ) {
        let ens = ParticleEnsemble::new(n, d, data).unwrap();
        let target = mixture_for(d);
        let kernel = RbfKernel::new(h).unwrap();
        let v = ksd_squared(&ens, &target, &kernel, KsdEstimator::VStatistic).unwrap().value;
        prop_assert!(v >= -1e-10 * v.abs().max(1.0), "V = {v}");

        let shuffled = permuted(&ens, &rotation(n));
        let v2 = ksd_squared(&shuffled, &target, &kernel, KsdEstimator::VStatistic)
            .unwrap()
            .value;
        let tol = 1e-11 * v.abs().max(1.0);
        prop_assert!((v - v2).abs() <= tol, "V changed under permutation: {v} vs {v2}");
    }

    /// Permuting the particles permutes the direction rows the same way.
    #[test]
    fn direction_is_permutation_equivariant(
        (n, d, data) in ensemble_strategy(12, 3),
        h in 0.5..4.0f64,
    ) {
        let ens = ParticleEnsemble::new(n, d, data).unwrap();
        let target = mixture_for(d);
        let kernel = RbfKernel::new(h).unwrap();
        let base = svgd_direction(&ens, &scores_of(&ens, &target), &kernel).unwrap();

        let perm = rotation(n);
        let shuffled = permuted(&ens, &perm);
        let moved = svgd_direction(&shuffled, &scores_of(&shuffled, &target), &kernel).unwrap();
        for (new_row, &old_row) in perm.iter().enumerate() {
            for c in 0..d {
                let a = base.combined[old_row * d + c];
                let b = moved.combined[new_row * d + c];
                let tol = 1e-11 * a.abs().max(1.0);
                prop_assert!((a - b).abs() <= tol, "row {old_row} coord {c}: {a} vs {b}");
            }
        }
    }

    /// The median-heuristic bandwidth only sees the pairwise distance
    /// multiset: exact under reordering, stable under translation.
    #[test]
    fn median_bandwidth_symmetries(
        (n, d, data) in ensemble_strategy(16, 3),
        shift in -10.0..10.0f64,
    ) {
        let ens = ParticleEnsemble::new(n, d, data.clone()).unwrap();
        let h = median_bandwidth(&ens);
        prop_assert!(h > 0.0);

        let shuffled = permuted(&ens, &rotation(n));
        // Squared distances are bitwise symmetric, so reordering is exact.
        prop_assert_eq!(median_bandwidth(&shuffled), h);

        let moved: Vec<f64> = data.iter().map(|v| v + shift).collect();
        let translated = ParticleEnsemble::new(n, d, moved).unwrap();
        let h2 = median_bandwidth(&translated);
        prop_assert!((h - h2).abs() <= 1e-9 * h.max(1.0), "{h} vs {h2}");
    }

    /// The rayon entry points agree bitwise with the sequential reference,
    /// whatever the threading layout.
    #[test]
    fn parallel_equals_sequential_bitwise(
        (n, d, data) in ensemble_strategy(16, 3),
        h in 0.5..4.0f64,
    ) {
        let ens = ParticleEnsemble::new(n, d, data).unwrap();
        let target = mixture_for(d);
        let kernel = RbfKernel::new(h).unwrap();
        let scores = scores_of(&ens, &target);

        let par = svgd_direction(&ens, &scores, &kernel).unwrap();
        let seq = svgd_direction_seq(&ens, &scores, &kernel).unwrap();
        prop_assert_eq!(&par.combined, &seq.combined);
        prop_assert_eq!(&par.driving, &seq.driving);
        prop_assert_eq!(&par.repulsive, &seq.repulsive);

        for estimator in [KsdEstimator::VStatistic, KsdEstimator::UStatistic] {
            if n == 1 && estimator == KsdEstimator::UStatistic {
                continue;
            }
            let a = ksd_squared(&ens, &target, &kernel, estimator).unwrap().value;
            let b = ksd_squared_seq(&ens, &target, &kernel, estimator).unwrap().value;
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    /// Expectation estimates against hand-rolled means.
    #[test]
    fn expectation_estimates_match_direct_means(
        values in proptest::collection::vec(-5.0..5.0f64, 1..40),
    ) {
        let n = values.len();
        let ens = ParticleEnsemble::new(n, 1, values.clone()).unwrap();
        let mean = values.iter().sum::<f64>() / n as f64;
        let second = values.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let est_mean = estimate_expectation(&ens, &TestFunctionSpec::X).unwrap();
        let est_second = estimate_expectation(&ens, &TestFunctionSpec::XSquared).unwrap();
        prop_assert!((est_mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        prop_assert!((est_second - second).abs() <= 1e-12 * second.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Averaging the minibatch score over every singleton batch recovers the
    /// full-data score, and the full-index batch is the exact score.
    #[test]
    fn minibatch_scores_are_unbiased(
        seed in 0u64..1000,
        w0 in -2.0..2.0f64,
        w1 in -2.0..2.0f64,
        beta in -1.0..1.0f64,
    ) {
        let data = stein_core::dataio::synth_logistic(16, &[1.0, -1.0], 0.1, seed).unwrap();
        let aug = stein_core::targets::augment_intercept(
            data.features(), data.n(), data.d()).unwrap();
        let posterior = BlrPosterior::new(aug, data.labels().to_vec(), data.d() + 1, 4).unwrap();
        let d_state = posterior.dim();
        let state = vec![w0, w1, 0.3, beta];
        prop_assert_eq!(d_state, state.len());

        let mut full = vec![0.0; d_state];
        posterior.score(&state, &mut full);

        // Full-index batch takes the same arithmetic path exactly.
        let all: Vec<usize> = (0..16).collect();
        let mut batched = vec![0.0; d_state];
        posterior.batch_score(&state, &all, &mut batched);
        prop_assert_eq!(&batched, &full);

        // Singleton batches average to the full score (n = 16 keeps the
        // N/|batch| rescaling to exact powers of two; tolerance covers the
        // reordered summation).
        let mut avg = vec![0.0; d_state];
        let mut g = vec![0.0; d_state];
        for k in 0..16 {
            posterior.batch_score(&state, &[k], &mut g);
            for (a, v) in avg.iter_mut().zip(&g) {
                *a += v;
            }
        }
        for a in avg.iter_mut() {
            *a /= 16.0;
        }
        for (a, f) in avg.iter().zip(&full) {
            prop_assert!((a - f).abs() <= 1e-10 * f.abs().max(1.0), "{a} vs {f}");
        }
    }

    /// One hundred transport iterations leave the ensemble measurably closer
    /// to the target than it started, in squared discrepancy.
    #[test]
    fn transport_decreases_discrepancy(
        values in proptest::collection::vec(-4.0..4.0f64, 10..24),
    ) {
        let n = values.len();
        let ens = ParticleEnsemble::new(n, 1, values).unwrap();
        let target = two_mode();
        let h0 = median_bandwidth(&ens);
        let k0 = RbfKernel::new(h0).unwrap();
        let before = ksd_squared(&ens, &target, &k0, KsdEstimator::VStatistic).unwrap().value;
        prop_assume!(before > 1e-3);

        let config = SvgdConfig::new(100, StepSchedule::adagrad(0.1, 0.9), 0);
        let run = run_svgd(&config, &target, &ens).unwrap();
        let h1 = median_bandwidth(&run.ensemble);
        let k1 = RbfKernel::new(h1).unwrap();
        let after = ksd_squared(&run.ensemble, &target, &k1, KsdEstimator::VStatistic)
            .unwrap()
            .value;
        prop_assert!(after < before, "KSD rose from {before} to {after}");
    }
}
