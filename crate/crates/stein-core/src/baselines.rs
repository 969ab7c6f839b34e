//! Comparison methods: stochastic gradient Langevin dynamics and plain MAP
//! gradient ascent.

use crate::ensemble::ParticleEnsemble;
use crate::error::{Result, SteinError};
use crate::rng::{streams, BatchSchedule, RngStream};
use crate::svgd::{ScheduleState, StepSchedule};
use crate::target::TargetDensity;

/// SGLD configuration. The step size decays as `eps_t = a / (t+1)^exponent`.
///
/// `gradient_scale` multiplies the drift term only; it exists because the
/// parallel-chains comparison historically rescaled gradients by `1/n`, and
/// defaults to 1.
#[derive(Clone, Copy, Debug)]
pub struct SgldConfig {
    pub a: f64,
    pub exponent: f64,
    pub chains: usize,
    pub gradient_scale: f64,
    pub seed: u64,
}

impl SgldConfig {
    pub fn new(a: f64, chains: usize, seed: u64) -> Result<Self> {
        let config = SgldConfig {
            a,
            exponent: 0.55,
            chains,
            gradient_scale: 1.0,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_exponent(mut self, exponent: f64) -> Result<Self> {
        self.exponent = exponent;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gradient_scale(mut self, scale: f64) -> Result<Self> {
        self.gradient_scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(SteinError::invalid(format!(
                "sgld: step scale a must be positive and finite, got {}",
                self.a
            )));
        }
        if !self.exponent.is_finite() {
            return Err(SteinError::invalid("sgld: non-finite step exponent"));
        }
        if self.chains == 0 {
            return Err(SteinError::invalid("sgld: need at least one chain"));
        }
        if !self.gradient_scale.is_finite() {
            return Err(SteinError::invalid("sgld: non-finite gradient scale"));
        }
        Ok(())
    }

    pub fn step_size(&self, t: usize) -> f64 {
        self.a / ((t + 1) as f64).powf(self.exponent)
    }
}

/// Langevin sampler over independent chains. Each chain owns a noise stream
/// and (for stochastic targets) a minibatch schedule keyed by its chain id,
/// so a chain's trajectory is a pure function of its initial state, the seed,
/// and its id — unaffected by how many other chains run alongside it.
pub struct SgldSampler {
    config: SgldConfig,
    noise: Vec<RngStream>,
    batches: Option<Vec<BatchSchedule>>,
}

impl SgldSampler {
    /// Chains get ids `0..chains`.
    pub fn new(config: &SgldConfig, target: &dyn TargetDensity) -> Result<Self> {
        let ids: Vec<u64> = (0..config.chains as u64).collect();
        Self::with_chain_ids(config, target, &ids)
    }

    /// Explicit chain ids, one per chain: chain `c` draws noise from stream
    /// `SGLD_NOISE_BASE + ids[c]` and batches from `SGLD_BATCH_BASE + ids[c]`.
    pub fn with_chain_ids(
        config: &SgldConfig,
        target: &dyn TargetDensity,
        ids: &[u64],
    ) -> Result<Self> {
        config.validate()?;
        if ids.len() != config.chains {
            return Err(SteinError::invalid(format!(
                "sgld: {} chain ids for {} chains",
                ids.len(),
                config.chains
            )));
        }
        let noise = ids
            .iter()
            .map(|&id| RngStream::new(config.seed, streams::SGLD_NOISE_BASE + id))
            .collect();
        let batches = match target.minibatch() {
            Some(spec) => {
                let mut schedules = Vec::with_capacity(ids.len());
                for &id in ids {
                    schedules.push(BatchSchedule::new(
                        spec.num_data,
                        spec.batch_size,
                        RngStream::new(config.seed, streams::SGLD_BATCH_BASE + id),
                    )?);
                }
                Some(schedules)
            }
            None => None,
        };
        Ok(SgldSampler {
            config: *config,
            noise,
            batches,
        })
    }

    /// One Langevin update at iteration `t`:
    /// `x <- x + (eps_t/2) * scale * grad log p(x) + eta`, `eta ~ N(0, eps_t I)`,
    /// applied chain by chain in index order.
    pub fn step(
        &mut self,
        ensemble: &ParticleEnsemble,
        target: &dyn TargetDensity,
        t: usize,
    ) -> Result<ParticleEnsemble> {
        let (n, d) = (ensemble.n(), ensemble.d());
        if n != self.config.chains {
            return Err(SteinError::invalid(format!(
                "sgld: ensemble has {n} rows but the sampler was built for {} chains",
                self.config.chains
            )));
        }
        if target.dim() != d {
            return Err(SteinError::invalid(format!(
                "sgld: target dimension {} != ensemble dimension {d}",
                target.dim()
            )));
        }
        let eps = self.config.step_size(t);
        let noise_sd = eps.sqrt();
        let drift = 0.5 * eps * self.config.gradient_scale;
        let mut data = ensemble.data().to_vec();
        let mut grad = vec![0.0; d];
        for c in 0..n {
            let x = &mut data[c * d..(c + 1) * d];
            match &mut self.batches {
                Some(schedules) => {
                    let batch = schedules[c].next_batch().to_vec();
                    target.batch_score(x, &batch, &mut grad);
                }
                None => target.score(x, &mut grad),
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(SteinError::NonFinite(format!(
                    "sgld: non-finite gradient for chain {c} at iteration {t}"
                )));
            }
            for k in 0..d {
                x[k] += drift * grad[k] + noise_sd * self.noise[c].standard_normal();
            }
        }
        ParticleEnsemble::new(n, d, data)
            .map_err(|e| SteinError::NonFinite(format!("sgld: at iteration {t}: {e}")))
    }
}

/// Output of [`run_sgld`].
pub struct SgldRun {
    /// Final states of all chains.
    pub ensemble: ParticleEnsemble,
    /// The last `keep_last` states of chain 0, oldest first. Used to thin a
    /// single long chain into a sample set.
    pub tail: Vec<Vec<f64>>,
}

pub fn run_sgld(
    config: &SgldConfig,
    target: &dyn TargetDensity,
    init: &ParticleEnsemble,
    iterations: usize,
    keep_last: usize,
) -> Result<SgldRun> {
    if keep_last > iterations {
        return Err(SteinError::invalid(format!(
            "sgld: cannot keep {keep_last} states from {iterations} iterations"
        )));
    }
    let mut sampler = SgldSampler::new(config, target)?;
    let mut current = init.clone();
    let mut tail = Vec::with_capacity(keep_last);
    for t in 0..iterations {
        current = sampler.step(&current, target, t)?;
        if iterations - t <= keep_last {
            tail.push(current.particle(0).to_vec());
        }
    }
    Ok(SgldRun {
        ensemble: current,
        tail,
    })
}

/// Gradient ascent on the log density: `x <- x + eps_t * grad log p(x)`.
///
/// Returns the trajectory including the initial point (`iterations + 1`
/// states). Stochastic targets consume minibatches from the same seeded
/// stream an SVGD run with the same seed would use, making this the
/// single-particle reference: SVGD with n = 1 reproduces it bitwise.
pub fn map_gradient_ascent(
    x0: &[f64],
    target: &dyn TargetDensity,
    schedule: StepSchedule,
    iterations: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = target.dim();
    if x0.len() != d {
        return Err(SteinError::invalid(format!(
            "map: start point has dimension {}, target has {d}",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SteinError::invalid("map: non-finite start point"));
    }
    schedule.validate()?;
    let mut batches = match target.minibatch() {
        Some(spec) => Some(BatchSchedule::new(
            spec.num_data,
            spec.batch_size,
            RngStream::new(seed, streams::BATCH),
        )?),
        None => None,
    };
    let mut state = ScheduleState::new(schedule)?;
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; d];
    let mut step = vec![0.0; d];
    let mut trajectory = Vec::with_capacity(iterations + 1);
    trajectory.push(x.clone());
    for t in 0..iterations {
        match &mut batches {
            Some(schedule) => {
                let batch = schedule.next_batch().to_vec();
                target.batch_score(&x, &batch, &mut grad);
            }
            None => target.score(&x, &mut grad),
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(SteinError::NonFinite(format!(
                "map: non-finite gradient at iteration {t}"
            )));
        }
        state.step(t, &grad, &mut step)?;
        for k in 0..d {
            x[k] += step[k];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SteinError::NonFinite(format!(
                "map: iterate became non-finite at iteration {t}"
            )));
        }
        trajectory.push(x.clone());
    }
    Ok(trajectory)
}
