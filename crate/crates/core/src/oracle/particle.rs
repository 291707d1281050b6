//! Bootstrap particle filter for point-process observations.
//!
//! Between jumps particles move by the latent dynamics and pick up the
//! survival weight `exp(−∫λ)` (trapezoid per substep); at an observed jump
//! the weight is multiplied by the pre-jump intensity. Weights are kept in
//! log form. The filter runs as several independent replicate clouds so
//! that standard errors come from the spread between replicates, which
//! accounts for resampling-induced correlation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{GammaLaw, JumpRecord, ModelParams};
use crate::simulation::{rng_for, sample_gamma, CirTransition};

/// One-step transition of the latent intensity for a fixed step size.
pub trait TransitionKernel {
    fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64;
}

/// Latent intensity dynamics the particle filter can propagate.
pub trait IntensityDynamics: Sync {
    type Kernel: TransitionKernel;

    fn kernel(&self, h: f64) -> Self::Kernel;
}

impl TransitionKernel for CirTransition {
    fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        CirTransition::sample(self, x, rng)
    }
}

/// Exact CIR transitions.
impl IntensityDynamics for ModelParams {
    type Kernel = CirTransition;

    fn kernel(&self, h: f64) -> CirTransition {
        CirTransition::new(self, h)
    }
}

/// Intensity frozen at its initial draw.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantIntensity;

impl TransitionKernel for ConstantIntensity {
    fn sample<R: Rng + ?Sized>(&self, x: f64, _rng: &mut R) -> f64 {
        x
    }
}

impl IntensityDynamics for ConstantIntensity {
    type Kernel = ConstantIntensity;

    fn kernel(&self, _h: f64) -> ConstantIntensity {
        ConstantIntensity
    }
}

/// Weighted particle approximation of the posterior at `time`.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    particles: Vec<f64>,
    log_weights: Vec<f64>,
    time: f64,
}

impl ParticleCloud {
    pub fn from_prior<R: Rng + ?Sized>(prior: &GammaLaw, n: usize, rng: &mut R) -> Self {
        Self {
            particles: (0..n).map(|_| sample_gamma(prior, rng)).collect(),
            log_weights: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Normalised weights.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degeneracy(self.time));
        }
        let w: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }

    /// Effective sample size `1/Σw²`.
    pub fn ess(&self) -> Result<f64> {
        let w = self.weights()?;
        Ok(1.0 / w.iter().map(|x| x * x).sum::<f64>())
    }

    /// Move every particle to `t` in substeps no longer than `max_step`.
    pub fn propagate<D, R>(&mut self, dynamics: &D, t: f64, max_step: f64, rng: &mut R)
    where
        D: IntensityDynamics,
        R: Rng + ?Sized,
    {
        let span = t - self.time;
        if span <= 0.0 {
            return;
        }
        let substeps = (span / max_step - 1e-9).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        let kernel = dynamics.kernel(h);
        for _ in 0..substeps {
            for (x, lw) in self.particles.iter_mut().zip(self.log_weights.iter_mut()) {
                let next = kernel.sample(*x, rng);
                *lw -= 0.5 * (*x + next) * h;
                *x = next;
            }
        }
        self.time = t;
    }

    /// Reweight by the intensity at an observed jump.
    pub fn observe_jump(&mut self) -> Result<()> {
        for (x, lw) in self.particles.iter().zip(self.log_weights.iter_mut()) {
            *lw += x.ln();
        }
        if self.log_weights.iter().all(|lw| !lw.is_finite()) {
            return Err(Error::Degeneracy(self.time));
        }
        Ok(())
    }

    /// Systematic resampling when the ESS drops below half the cloud size.
    pub fn resample_if_needed<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let w = self.weights()?;
        let n = w.len();
        let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        if ess >= 0.5 * n as f64 {
            return Ok(false);
        }
        let u0: f64 = rng.random::<f64>() / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut cum = w[0];
        let mut j = 0;
        for i in 0..n {
            let u = u0 + i as f64 / n as f64;
            while u > cum && j + 1 < n {
                j += 1;
                cum += w[j];
            }
            out.push(self.particles[j]);
        }
        self.particles = out;
        self.log_weights.iter_mut().for_each(|lw| *lw = 0.0);
        Ok(true)
    }

    /// Weighted average of `f` over the cloud.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let w = self.weights()?;
        Ok(w.iter().zip(&self.particles).map(|(w, &x)| w * f(x)).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleFilterConfig {
    /// Total particles across all replicates.
    pub n_particles: usize,
    /// Independent replicate clouds used for the standard error.
    pub replicates: usize,
    /// Maximum propagation substep.
    pub step: f64,
    pub seed: u64,
}

impl Default for ParticleFilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 100_000,
            replicates: 40,
            step: 0.01,
            seed: 0,
        }
    }
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Particle estimates at one query time.
#[derive(Debug, Clone, PartialEq)]
pub struct PfPoint {
    pub t: f64,
    pub n: usize,
    pub lambda_hat: Estimate,
    pub mgf: Vec<Estimate>,
    pub min_ess: f64,
}

fn combine(values: &[f64]) -> Estimate {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        f64::NAN
    };
    Estimate {
        value: mean,
        se: (var / r).sqrt(),
    }
}

struct ReplicateOutput {
    lambda: Vec<f64>,
    mgf: Vec<Vec<f64>>,
    ess: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_replicate<D: IntensityDynamics>(
    dynamics: &D,
    prior: &GammaLaw,
    jumps: &JumpRecord,
    query: &[f64],
    query_s: &[f64],
    size: usize,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ReplicateOutput> {
    let mut cloud = ParticleCloud::from_prior(prior, size, rng);
    let mut out = ReplicateOutput {
        lambda: Vec::with_capacity(query.len()),
        mgf: Vec::with_capacity(query.len()),
        ess: Vec::with_capacity(query.len()),
    };
    let mut pending = jumps.times().iter().copied().peekable();
    for &t in query {
        while let Some(&tj) = pending.peek() {
            if tj > t {
                break;
            }
            cloud.propagate(dynamics, tj, step, rng);
            cloud.observe_jump()?;
            cloud.resample_if_needed(rng)?;
            pending.next();
        }
        cloud.propagate(dynamics, t, step, rng);
        out.ess.push(cloud.ess()?);
        out.lambda.push(cloud.expectation(|x| x)?);
        out.mgf.push(
            query_s
                .iter()
                .map(|&s| cloud.expectation(|x| (s * x).exp()))
                .collect::<Result<_>>()?,
        );
        cloud.resample_if_needed(rng)?;
    }
    Ok(out)
}

/// Run the replicated particle filter and report `λ̂` and `f̂(s)` for each
/// `s` in `query_s` at every query time (after any jump at that time).
pub fn particle_filter<D: IntensityDynamics>(
    jumps: &JumpRecord,
    dynamics: &D,
    prior: &GammaLaw,
    query: &[f64],
    query_s: &[f64],
    config: &ParticleFilterConfig,
) -> Result<Vec<PfPoint>> {
    if config.n_particles < 1000 {
        return Err(Error::InvalidInput(format!(
            "particle filter needs at least 1000 particles, got {}",
            config.n_particles
        )));
    }
    if config.replicates < 2 || config.n_particles / config.replicates < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 replicates of 100 particles (got {} over {})",
            config.n_particles, config.replicates
        )));
    }
    if !(config.step > 0.0) {
        return Err(Error::InvalidInput(format!("step = {}", config.step)));
    }
    if query.windows(2).any(|w| !(w[0] <= w[1])) || query.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidInput(
            "query times must be nonnegative and nondecreasing".into(),
        ));
    }
    let size = config.n_particles / config.replicates;
    let outputs: Vec<ReplicateOutput> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(config.seed, 1000 + r as u64);
            run_replicate(
                dynamics,
                prior,
                jumps,
                query,
                query_s,
                size,
                config.step,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;
    Ok(query
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let lambdas: Vec<f64> = outputs.iter().map(|o| o.lambda[i]).collect();
            let mgf = (0..query_s.len())
                .map(|k| combine(&outputs.iter().map(|o| o.mgf[i][k]).collect::<Vec<_>>()))
                .collect();
            PfPoint {
                t,
                n: jumps.count_until(t),
                lambda_hat: combine(&lambdas),
                mgf,
                min_ess: outputs
                    .iter()
                    .map(|o| o.ess[i])
                    .fold(f64::INFINITY, f64::min),
            }
        })
        .collect())
}
