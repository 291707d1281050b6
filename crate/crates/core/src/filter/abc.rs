//! The three helper functions that parametrise the between-jump flow.
//!
//! ```text
//! A(x,t,y) = x((τ−α)e^{−τt} + τ + α) + 2y(1 − e^{−τt})
//! B(s,t)   = ρs(e^{−τt} − 1) + (τ−α)e^{−τt} + τ + α
//! C(x,t,y) = y((α+τ)e^{−τt} + τ − α) + ρx(1 − e^{−τt})
//! ```
//!
//! `A` and `C` are linear in `(x, y)`; `B` and `C(−2/ρ, t, s)` are linear
//! in `s`, which is what keeps the filter polynomial.

use crate::params::ModelParams;

/// Selector for [`abc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcKind {
    A,
    B,
    C,
}

/// Arguments for [`abc`]: `(x, t, y)` for `A`/`C`, `(s, t)` for `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbcArgs {
    Xty { x: f64, t: f64, y: f64 },
    St { s: f64, t: f64 },
}

/// `1 − e^{−τt}`
fn one_minus_decay(p: &ModelParams, t: f64) -> f64 {
    -(-p.tau() * t).exp_m1()
}

pub fn a_fn(x: f64, t: f64, y: f64, p: &ModelParams) -> f64 {
    let (alpha, tau) = (p.alpha(), p.tau());
    let om = one_minus_decay(p, t);
    let e = 1.0 - om;
    x * ((tau - alpha) * e + tau + alpha) + 2.0 * y * om
}

pub fn b_fn(s: f64, t: f64, p: &ModelParams) -> f64 {
    let (alpha, tau) = (p.alpha(), p.tau());
    let om = one_minus_decay(p, t);
    let e = 1.0 - om;
    -p.rho() * s * om + (tau - alpha) * e + tau + alpha
}

pub fn c_fn(x: f64, t: f64, y: f64, p: &ModelParams) -> f64 {
    let (alpha, tau) = (p.alpha(), p.tau());
    let om = one_minus_decay(p, t);
    let e = 1.0 - om;
    y * ((alpha + tau) * e + tau - alpha) + p.rho() * x * om
}

/// Dispatching form of the helpers; mismatched argument shapes return NaN.
pub fn abc(kind: AbcKind, args: AbcArgs, params: &ModelParams) -> f64 {
    match (kind, args) {
        (AbcKind::A, AbcArgs::Xty { x, t, y }) => a_fn(x, t, y, params),
        (AbcKind::C, AbcArgs::Xty { x, t, y }) => c_fn(x, t, y, params),
        (AbcKind::B, AbcArgs::St { s, t }) => b_fn(s, t, params),
        _ => f64::NAN,
    }
}

/// Coefficients `(a, b, c, d)` of the Möbius map
/// `s ↦ C(−2/ρ, t, s) / B(s, t) = (a s + b)/(c s + d)`.
pub fn mobius_coefficients(t: f64, p: &ModelParams) -> (f64, f64, f64, f64) {
    let (alpha, tau) = (p.alpha(), p.tau());
    let om = one_minus_decay(p, t);
    let e = 1.0 - om;
    let a = (alpha + tau) * e + tau - alpha;
    let b = -2.0 * om;
    let c = -p.rho() * om;
    let d = (tau - alpha) * e + tau + alpha;
    (a, b, c, d)
}
