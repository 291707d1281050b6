//! Model parameters for the square-root (CIR) intensity
//!
//! ```text
//! dλ_t = −α(λ_t − μ₀) dt + β √λ_t dW_t,     λ₀ ~ Gamma(2θ, φ)
//! ```
//!
//! Gamma laws use the **shape/rate** convention throughout the crate:
//! `Gamma(a, b)` has mean `a/b` and moment generating function
//! `(b/(b − s))^a` for `s < b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated CIR coefficients with the derived constants
/// `ρ = β²`, `τ = √(α² + 2β²)` and `θ = μ₀α/ρ`.
///
/// The derived values are computed once at construction. `τ` is the same
/// quantity that appears as `γ` in the full-information survival formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    alpha: f64,
    mu0: f64,
    beta: f64,
    rho: f64,
    tau: f64,
    theta: f64,
    strictly_positive: bool,
}

/// Unvalidated parameter block as it appears in JSON configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub alpha: f64,
    pub mu0: f64,
    pub beta: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFiniteParameter(name));
    }
    if value <= 0.0 {
        return Err(Error::NonPositiveParameter(name));
    }
    Ok(())
}

impl ModelParams {
    pub fn new(alpha: f64, mu0: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("mu0", mu0)?;
        check_positive("beta", beta)?;
        let rho = beta * beta;
        let tau = (alpha * alpha + 2.0 * rho).sqrt();
        let theta = mu0 * alpha / rho;
        if !(tau > alpha) || !theta.is_finite() || !(theta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "derived constants out of range (tau = {tau}, theta = {theta})"
            )));
        }
        Ok(Self {
            alpha,
            mu0,
            beta,
            rho,
            tau,
            theta,
            strictly_positive: alpha * mu0 >= 0.5 * rho,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `β²`
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `√(α² + 2β²)`
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `μ₀α/β²`; the prior shape is `2θ`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Whether `αμ₀ ≥ β²/2`, which keeps the latent path away from zero.
    /// Violations are allowed: the filter formulas stay well defined.
    pub fn strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    /// Long-run mean of the intensity at time `t` started from `lambda0`.
    pub fn mean_at(&self, lambda0: f64, t: f64) -> f64 {
        let decay = (-self.alpha * t).exp();
        lambda0 * decay + self.mu0 * (1.0 - decay)
    }

    /// Stationary variance `μ₀β²/(2α)`.
    pub fn stationary_variance(&self) -> f64 {
        self.mu0 * self.rho / (2.0 * self.alpha)
    }
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.alpha, raw.mu0, raw.beta)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            alpha: p.alpha,
            mu0: p.mu0,
            beta: p.beta,
        }
    }
}

/// Gamma law in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLaw {
    shape: f64,
    rate: f64,
}

impl GammaLaw {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("rate", rate)?;
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    /// `(rate/(rate − s))^shape`, defined for `s < rate`.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        if !(s < self.rate) {
            return Err(Error::OutOfDomain {
                s,
                bound: self.rate,
            });
        }
        Ok((self.rate / (self.rate - s)).powf(self.shape))
    }
}

/// Raw configuration block `{"alpha", "mu0", "beta", "phi"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub mu0: f64,
    pub beta: f64,
    pub phi: f64,
}

/// Validate a raw parameter block, returning the model and its
/// `Gamma(2θ, φ)` initial law.
pub fn validate_params(raw: &ParamsConfig) -> Result<(ModelParams, GammaLaw)> {
    for (name, v) in [
        ("alpha", raw.alpha),
        ("mu0", raw.mu0),
        ("beta", raw.beta),
        ("phi", raw.phi),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteParameter(name));
        }
    }
    let params = ModelParams::new(raw.alpha, raw.mu0, raw.beta)?;
    check_positive("phi", raw.phi)?;
    let prior = GammaLaw::new(2.0 * params.theta(), raw.phi)?;
    Ok((params, prior))
}

/// Strictly increasing, positive observed jump times `T₁ < T₂ < …`.
/// `T₀ = 0` is implicit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct JumpRecord {
    times: Vec<f64>,
}

impl JumpRecord {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0;
        for &t in &times {
            if !t.is_finite() || t <= prev {
                return Err(Error::NonMonotoneJumps(t));
            }
            prev = t;
        }
        Ok(Self { times })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Number of jumps at or before `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t)
    }

    /// Append a jump time after the current last one.
    pub fn push(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() || t <= self.last().unwrap_or(0.0) {
            return Err(Error::NonMonotoneJumps(t));
        }
        self.times.push(t);
        Ok(())
    }

    /// Jumps strictly before `t`.
    pub fn truncated(&self, t: f64) -> JumpRecord {
        JumpRecord {
            times: self.times.iter().copied().filter(|&x| x < t).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for JumpRecord {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        JumpRecord::new(v)
    }
}

impl From<JumpRecord> for Vec<f64> {
    fn from(j: JumpRecord) -> Self {
        j.times
    }
}
