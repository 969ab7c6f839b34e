//! Particle ensembles: the empirical measure transported by SVGD.

use crate::error::{Result, SteinError};
use crate::rng::RngStream;

/// `n` particles in R^d, stored as a row-major dense matrix (row i = particle
/// x_i). Contiguous rows keep the O(n^2 d) pairwise kernel loops cache
/// friendly.
///
/// An ensemble is an immutable snapshot between transport steps: operations
/// that move particles return a new ensemble instead of mutating in place, so
/// a snapshot may be shared read-only across worker threads.
///
/// Invariants: `n >= 1`, `d >= 1`, and every entry is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl ParticleEnsemble {
    /// Build an ensemble from a row-major `n x d` matrix.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(SteinError::invalid(format!(
                "ensemble: n and d must be >= 1, got n={n}, d={d}"
            )));
        }
        if data.len() != n * d {
            return Err(SteinError::invalid(format!(
                "ensemble: expected {} entries ({n} x {d}), got {}",
                n * d,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(SteinError::NonFinite(format!(
                "ensemble: entry {} (particle {}, coordinate {}) is not finite",
                bad,
                bad / d,
                bad % d
            )));
        }
        Ok(ParticleEnsemble { n, d, data })
    }

    /// `n` i.i.d. draws from the isotropic Gaussian N(mean, stddev^2 I).
    /// Deterministic given the stream: coordinates are drawn row by row in
    /// index order.
    pub fn from_gaussian(
        n: usize,
        d: usize,
        mean: &[f64],
        stddev: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(SteinError::invalid(format!(
                "ensemble: n and d must be >= 1, got n={n}, d={d}"
            )));
        }
        if mean.len() != d {
            return Err(SteinError::invalid(format!(
                "ensemble: mean has {} entries, expected d={d}",
                mean.len()
            )));
        }
        if !(stddev > 0.0) || !stddev.is_finite() {
            return Err(SteinError::invalid(format!(
                "ensemble: stddev must be positive and finite, got {stddev}"
            )));
        }
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            for &m in mean.iter() {
                data.push(m + stddev * rng.standard_normal());
            }
        }
        ParticleEnsemble::new(n, d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Particle i as a coordinate slice.
    pub fn particle(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// The full row-major matrix.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Iterate over particle rows in index order.
    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Mean of each coordinate across particles.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        for acc in &mut m {
            *acc *= inv;
        }
        m
    }
}
