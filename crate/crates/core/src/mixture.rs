//! The posterior after `n` jumps as a mixture of `n + 1` Gamma laws with a
//! common rate `Q` and shapes `2θ + n − i`.
//!
//! Writing `q_n(s) = Σ R_j s^j`, matching `q_n(s) = Σ π_i ((Q − s)/Q)^i`
//! gives the triangular system solved from `j = n` down:
//!
//! ```text
//! π_j = (−1)^j R_j Q^j − Σ_{i>j} C(i, j) π_i
//! ```
//!
//! The weights sum to one because `q_n(0) = 1`. Nonnegativity is only
//! observed, not guaranteed; weights are never clamped.

use statrs::distribution::{Continuous, ContinuousCDF, Gamma as GammaDist};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::filter::FilterState;

/// Tolerance below zero still accepted for a mixing weight.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaMixture {
    pub n: usize,
    pub rate: f64,
    pub weights: Vec<f64>,
    pub shapes: Vec<f64>,
}

/// Binomial coefficient, exact below 21 and via log-gamma above.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 20 {
        let k = k.min(n - k);
        let mut acc: u64 = 1;
        for i in 0..k as u64 {
            acc = acc * (n as u64 - i) / (i + 1);
        }
        acc as f64
    } else {
        (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
            .exp()
            .round()
    }
}

/// Unevaluated sum `hi + lo` carrying about twice the working precision.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn add(self, other: Self) -> Self {
        let s = self.hi + other.hi;
        let z = s - self.hi;
        let e = (self.hi - (s - z)) + (other.hi - z) + self.lo + other.lo;
        let hi = s + e;
        Self {
            hi,
            lo: e - (hi - s),
        }
    }

    fn mul_f64(self, x: f64) -> Self {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p) + self.lo * x;
        let hi = p + e;
        Self {
            hi,
            lo: e - (hi - p),
        }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl GammaMixture {
    /// Mixture with weights solved from the coefficients `R_j` of
    /// `q_n(s) = Σ R_j s^j` and common rate `rate`. The small weights come
    /// out of heavy cancellation, so the recursion runs in double-double.
    pub fn from_coefficients(coeffs: &[f64], rate: f64, base_shape: f64) -> Self {
        let n = coeffs.len() - 1;
        let mut exact = vec![DoubleDouble::from(0.0); n + 1];
        let mut rate_pow = vec![DoubleDouble::from(1.0); n + 1];
        for j in 1..=n {
            rate_pow[j] = rate_pow[j - 1].mul_f64(rate);
        }
        for j in (0..=n).rev() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let mut w = rate_pow[j].mul_f64(sign * coeffs[j]);
            for (i, e) in exact.iter().enumerate().skip(j + 1) {
                w = w.add(e.mul_f64(-binomial(i, j)));
            }
            exact[j] = w;
        }
        let weights = exact.iter().map(|w| w.value()).collect();
        let shapes = (0..=n).map(|i| base_shape + (n - i) as f64).collect();
        Self {
            n,
            rate,
            weights,
            shapes,
        }
    }

    /// Most negative weight, if any is below `−WEIGHT_TOLERANCE`.
    pub fn negative_weight(&self) -> Option<(usize, f64)> {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w < -WEIGHT_TOLERANCE)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn is_valid(&self) -> bool {
        self.negative_weight().is_none()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mgf(&self, s: f64) -> Result<f64> {
        if !(s < self.rate) {
            return Err(Error::OutOfDomain {
                s,
                bound: self.rate,
            });
        }
        let ratio = self.rate / (self.rate - s);
        Ok(self
            .weights
            .iter()
            .zip(&self.shapes)
            .map(|(w, a)| w * ratio.powf(*a))
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.shapes)
            .map(|(w, a)| w * a)
            .sum::<f64>()
            / self.rate
    }

    pub fn second_moment(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.shapes)
            .map(|(w, a)| w * a * (a + 1.0))
            .sum::<f64>()
            / (self.rate * self.rate)
    }

    fn components(&self) -> impl Iterator<Item = (f64, GammaDist)> + '_ {
        self.weights.iter().zip(&self.shapes).map(|(&w, &a)| {
            (
                w,
                GammaDist::new(a, self.rate).expect("positive shape and rate"),
            )
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.components().map(|(w, g)| w * g.pdf(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components().map(|(w, g)| w * g.cdf(x)).sum()
    }
}

/// Mixture representation of the filter posterior.
pub fn mixture_from_state(state: &FilterState) -> GammaMixture {
    let q = state.current_poly();
    let mut coeffs = q.coeffs().to_vec();
    coeffs.resize(state.n() + 1, 0.0);
    GammaMixture::from_coefficients(&coeffs, state.rate(), 2.0 * state.params().theta())
}

/// Like [`mixture_from_state`] but reports a weight below the tolerance as
/// an error carrying the offending index and state time.
pub fn checked_mixture(state: &FilterState) -> Result<GammaMixture> {
    let mix = mixture_from_state(state);
    if let Some((j, w)) = mix.negative_weight() {
        return Err(Error::DegenerateState(format!(
            "negative mixing weight pi_{j} = {w:e} at t = {} with n = {} (jumps {:?})",
            state.t(),
            state.n(),
            state.jump_times().times()
        )));
    }
    Ok(mix)
}
