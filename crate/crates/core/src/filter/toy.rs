//! Constant-intensity filter (all CIR coefficients zero).
//!
//! With `λ ~ Gamma(a, b)` and `n` jumps seen by `t`, the posterior is
//! `Gamma(a + n, b + t)` regardless of when the jumps happened.

use crate::error::{Error, Result};

pub fn toy_filter_mgf(a: f64, b: f64, t: f64, n: usize, s: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveParameter("a"));
    }
    if !(b > 0.0) {
        return Err(Error::NonPositiveParameter("b"));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("t = {t}")));
    }
    let rate = b + t;
    if !(s < rate) {
        return Err(Error::OutOfDomain { s, bound: rate });
    }
    Ok((rate / (rate - s)).powf(a + n as f64))
}

pub fn toy_filter_mean(a: f64, b: f64, t: f64, n: usize) -> f64 {
    (a + n as f64) / (b + t)
}
