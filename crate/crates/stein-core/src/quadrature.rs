//! Composite-Simpson quadrature with interval doubling, used by the theory
//! checks. Smooth Gaussian-type integrands over a finite range converge in a
//! few doublings; the node count is reported so checks are reproducible.

use crate::error::{Result, SteinError};

/// A converged quadrature value and the number of nodes that produced it.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOutcome {
    pub value: f64,
    /// Number of function evaluation nodes (intervals + 1).
    pub nodes: usize,
}

/// Composite Simpson's rule on `intervals` equal subintervals of [a, b].
/// `intervals` must be even and >= 2.
pub fn simpson_fixed(f: &dyn Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals >= 2 && intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Adaptive Simpson integration: starts at `min_intervals` (rounded up to an
/// even count >= 2) and doubles the interval count until two successive
/// Simpson values differ by at most `tol` in absolute value.
///
/// Returns the converged value and its node count, or a numerical-failure
/// error if `max_doublings` is exhausted before convergence.
pub fn integrate_doubling(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    min_intervals: usize,
    tol: f64,
    max_doublings: usize,
) -> Result<QuadratureOutcome> {
    if !(b > a) {
        return Err(SteinError::invalid(format!(
            "quadrature: range [{a}, {b}] is empty"
        )));
    }
    if !(tol > 0.0) {
        return Err(SteinError::invalid("quadrature: tolerance must be positive"));
    }
    let mut intervals = min_intervals.next_multiple_of(2).max(2);
    let mut prev = simpson_fixed(f, a, b, intervals);
    for _ in 0..max_doublings {
        intervals *= 2;
        let cur = simpson_fixed(f, a, b, intervals);
        if (cur - prev).abs() <= tol {
            if !cur.is_finite() {
                return Err(SteinError::NumericalFailure(
                    "quadrature: integrand produced non-finite values".into(),
                ));
            }
            return Ok(QuadratureOutcome {
                value: cur,
                nodes: intervals + 1,
            });
        }
        prev = cur;
    }
    Err(SteinError::NumericalFailure(format!(
        "quadrature: no convergence to tol {tol} within {max_doublings} doublings ({intervals} intervals)"
    )))
}
