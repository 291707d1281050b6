//! Full-information survival quantities.
//!
//! With the intensity observed, `P(τ > s + dt | λ_s) = exp(−αμ₀ φ(dt) − λ_s ψ(dt))`
//! where `(φ, ψ)` solve the CIR Riccati system
//!
//! ```text
//! ψ' = 1 − αψ − (β²/2)ψ²,   φ' = ψ,   φ(0) = ψ(0) = 0.
//! ```
//!
//! Both closed forms are evaluated in terms of `e^{−γt}` so they stay finite
//! on any horizon.

use crate::params::ModelParams;

/// The pair `(φ(dt), ψ(dt))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiPair {
    pub phi: f64,
    pub psi: f64,
}

pub fn riccati(dt: f64, params: &ModelParams) -> RiccatiPair {
    debug_assert!(dt >= 0.0);
    let alpha = params.alpha();
    let gamma = params.tau();
    // e^{−γt} − 1, kept separate for accuracy near t = 0
    let em1 = (-gamma * dt).exp_m1();
    let e = em1 + 1.0;
    let denom = (gamma - alpha) * e + gamma + alpha;
    let psi = -2.0 * em1 / denom;
    let log_term = ((gamma - alpha) * em1 / (2.0 * gamma)).ln_1p();
    let phi = (2.0 / params.rho()) * (0.5 * dt * (gamma - alpha) + log_term);
    RiccatiPair {
        phi: phi.max(0.0),
        psi: psi.max(0.0),
    }
}

/// `lim_{t→∞} ψ(t) = 2/(γ + α)`.
pub fn psi_limit(params: &ModelParams) -> f64 {
    2.0 / (params.tau() + params.alpha())
}

/// Survival probability over `dt` given the current intensity, on the event
/// that no default has happened yet.
pub fn survival_full_info(lambda_s: f64, dt: f64, params: &ModelParams) -> f64 {
    let RiccatiPair { phi, psi } = riccati(dt, params);
    (-params.alpha() * params.mu0() * phi - lambda_s * psi).exp()
}
