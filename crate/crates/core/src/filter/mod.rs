//! Exact recursive filter for a Cox process with unobserved CIR intensity.
//!
//! With `λ₀ ~ Gamma(2θ, φ)` and `n` jumps observed by time `t`, the
//! conditional MGF of `λ_t` is
//!
//! ```text
//! f̂(s,t) = q_n(s,t) · (Q/(Q − s))^{2θ+n},   Q = 𝒜(t,T_n)/𝒞(t,T_n),
//! ```
//!
//! with `q_n(·,t)` a polynomial normalised to `q_n(0,t) = 1`. The
//! unnormalised transform is `g(s,t) ∝ K(t) p_n(s,t) (𝒜 − s𝒞)^{−(2θ+n)}`.
//! Only `f̂ = g(s,t)/g(0,t)` is ever needed, so the `s`-free factor `K(t)`
//! (and with it the reference intensity, fixed notionally at 1) is never
//! computed.
//!
//! Between jumps the state only changes through `𝒜`/`𝒞`; the polynomial
//! for the current time is obtained lazily from the snapshot taken at the
//! last jump by the Möbius substitution `s ↦ C(−2/ρ,Δ,s)/B(s,Δ)`. At a
//! jump `g` is replaced by `∂_s g`, which maps
//! `p ↦ (2θ+n)𝒞 p + (𝒜 − s𝒞) p'`.

pub mod abc;
pub mod poly;
pub mod toy;

use crate::error::{Error, Result};
use crate::params::{GammaLaw, JumpRecord, ModelParams};
use crate::riccati::riccati;

pub use abc::{a_fn, abc, b_fn, c_fn, mobius_coefficients, AbcArgs, AbcKind};
pub use poly::Poly;
pub use toy::{toy_filter_mean, toy_filter_mgf};

/// Posterior summary at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    t: f64,
    n: usize,
    jump_times: JumpRecord,
    /// 𝒜(t, T_n)
    script_a: f64,
    /// 𝒞(t, T_n)
    script_c: f64,
    /// 𝒜(T_n, T_{n−1}); `φ` before the first jump.
    snapshot_a: f64,
    /// 𝒞(T_n, T_{n−1}); `1` before the first jump.
    snapshot_c: f64,
    /// `p_n(·, T_n)` normalised to unit constant term, formal degree `n`.
    poly_snapshot: Poly,
    params: ModelParams,
    phi0: f64,
}

impl FilterState {
    /// Prior state: `f̂(s,0) = (φ/(φ−s))^{2θ}`.
    pub fn init(params: &ModelParams, phi: f64) -> Result<Self> {
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::NonPositiveParameter("phi"));
        }
        let two_tau = 2.0 * params.tau();
        Ok(Self {
            t: 0.0,
            n: 0,
            jump_times: JumpRecord::empty(),
            script_a: two_tau * phi,
            script_c: two_tau,
            snapshot_a: phi,
            snapshot_c: 1.0,
            poly_snapshot: Poly::constant(1.0),
            params: *params,
            phi0: phi,
        })
    }

    /// Filter over `jumps` and stop at `t` (after any jump at exactly `t`).
    pub fn at(params: &ModelParams, phi: f64, jumps: &JumpRecord, t: f64) -> Result<Self> {
        let mut state = Self::init(params, phi)?;
        for &tj in jumps.times().iter().take_while(|&&tj| tj <= t) {
            state = state.observe_jump(tj)?;
        }
        state.advance(t)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jump_times(&self) -> &JumpRecord {
        &self.jump_times
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn script_a(&self) -> f64 {
        self.script_a
    }

    pub fn script_c(&self) -> f64 {
        self.script_c
    }

    pub fn snapshot_a(&self) -> f64 {
        self.snapshot_a
    }

    pub fn snapshot_c(&self) -> f64 {
        self.snapshot_c
    }

    pub fn poly_snapshot(&self) -> &Poly {
        &self.poly_snapshot
    }

    /// `T_n`, with `T₀ = 0`.
    pub fn last_jump(&self) -> f64 {
        self.jump_times.last().unwrap_or(0.0)
    }

    /// Common rate `Q(t,T_n) = 𝒜/𝒞` of the Gamma components.
    pub fn rate(&self) -> f64 {
        self.script_a / self.script_c
    }

    /// Shape of the leading Gamma factor, `2θ + n`.
    pub fn shape(&self) -> f64 {
        2.0 * self.params.theta() + self.n as f64
    }

    fn check_domain(&self) -> Result<()> {
        let q = self.rate();
        if !(self.script_a > 0.0 && self.script_c > 0.0 && q.is_finite()) {
            return Err(Error::DegenerateState(format!(
                "non-positive rate at t = {} (A = {}, C = {})",
                self.t, self.script_a, self.script_c
            )));
        }
        Ok(())
    }

    /// Propagate to `new_t`, assuming no jump in `(t, new_t]`.
    pub fn advance(&self, new_t: f64) -> Result<Self> {
        if !(new_t >= self.t) || !new_t.is_finite() {
            return Err(Error::TimeRegression {
                current: self.t,
                requested: new_t,
            });
        }
        if new_t == self.t {
            return Ok(self.clone());
        }
        let dt = new_t - self.last_jump();
        let mut next = self.clone();
        next.t = new_t;
        next.script_a = a_fn(self.snapshot_a, dt, self.snapshot_c, &self.params);
        next.script_c = c_fn(self.snapshot_a, dt, self.snapshot_c, &self.params);
        next.check_domain()?;
        Ok(next)
    }

    /// Register a jump at the current time.
    pub fn jump_update(&self) -> Result<Self> {
        let mut jump_times = self.jump_times.clone();
        jump_times.push(self.t)?;
        let current = self.raw_current_poly();
        let k = self.shape();
        let (a, c) = (self.script_a, self.script_c);
        // (2θ+n)𝒞 p(s) + (𝒜 − s𝒞) p'(s)
        let tilt = &current.scale(k * c) + &(&current.derivative() * &Poly::linear(-c, a));
        let raw = Poly::new({
            let mut v = tilt.coeffs().to_vec();
            v.resize(self.n + 2, 0.0);
            v
        });
        let poly_snapshot = raw.normalized().ok_or_else(|| {
            Error::DegenerateState(format!(
                "jump polynomial vanishes at s = 0 (t = {})",
                self.t
            ))
        })?;
        if !(raw.coeffs()[0] > 0.0) {
            return Err(Error::DegenerateState(format!(
                "jump polynomial has non-positive value at s = 0 (t = {})",
                self.t
            )));
        }
        let two_tau = 2.0 * self.params.tau();
        let next = Self {
            t: self.t,
            n: self.n + 1,
            jump_times,
            script_a: two_tau * a,
            script_c: two_tau * c,
            snapshot_a: a,
            snapshot_c: c,
            poly_snapshot,
            params: self.params,
            phi0: self.phi0,
        };
        next.check_domain()?;
        Ok(next)
    }

    /// Advance to `t` and register a jump there.
    pub fn observe_jump(&self, t: f64) -> Result<Self> {
        if t <= self.last_jump() || (self.n == 0 && t <= 0.0) {
            return Err(Error::NonMonotoneJumps(t));
        }
        self.advance(t)?.jump_update()
    }

    /// `p_n(·,t)` up to the constant fixed at the last jump.
    pub fn raw_current_poly(&self) -> Poly {
        if self.n == 0 {
            return Poly::constant(1.0);
        }
        let (a, b, c, d) = mobius_coefficients(self.t - self.last_jump(), &self.params);
        self.poly_snapshot.mobius_compose(a, b, c, d)
    }

    /// `q_n(·,t) = p_n(·,t)/p_n(0,t)`; its coefficients are `R_i^n(t)`.
    pub fn current_poly(&self) -> Poly {
        self.raw_current_poly()
            .normalized()
            .expect("p_n(0,t) > 0 on reachable states")
    }

    /// `f̂(s,t) = E[e^{sλ_t} | jumps up to t]`, for `s < Q`.
    pub fn conditional_mgf(&self, s: f64) -> Result<f64> {
        let q = self.rate();
        if !(s < q) {
            return Err(Error::OutOfDomain { s, bound: q });
        }
        let poly = self.current_poly();
        Ok(poly.eval(s) * (q / (q - s)).powf(self.shape()))
    }

    /// `λ̂_t = q_n'(0,t) + (2θ+n)/Q`.
    pub fn conditional_mean(&self) -> f64 {
        let poly = self.current_poly();
        let r1 = poly.coeffs().get(1).copied().unwrap_or(0.0);
        r1 + self.shape() / self.rate()
    }

    /// `E[λ_t | ·]` and `E[λ_t² | ·]` from the first two `s`-derivatives of
    /// `f̂` at zero.
    pub fn conditional_moments(&self) -> (f64, f64) {
        let poly = self.current_poly();
        let r1 = poly.coeffs().get(1).copied().unwrap_or(0.0);
        let r2 = poly.coeffs().get(2).copied().unwrap_or(0.0);
        let (k, q) = (self.shape(), self.rate());
        let m1 = r1 + k / q;
        // (log f̂)'' = 2R₂ − R₁² + k/Q²
        let m2 = m1 * m1 + 2.0 * r2 - r1 * r1 + k / (q * q);
        (m1, m2)
    }

    /// Probability of no jump in `(t, t+dt]` given the jumps so far:
    /// `exp(−αμ₀ φ(dt)) · f̂(−ψ(dt), t)`.
    pub fn conditional_survival(&self, dt: f64) -> Result<f64> {
        if !(dt >= 0.0) {
            return Err(Error::InvalidInput(format!("survival horizon {dt}")));
        }
        let r = riccati(dt, &self.params);
        let mgf = self.conditional_mgf(-r.psi)?;
        Ok((-self.params.alpha() * self.params.mu0() * r.phi).exp() * mgf)
    }

    /// Unnormalised `g(s,t)` keeping the time-dependent factor
    /// `e^{θ(α−τ)(t−T_n)}` of `K(t)` and dropping its piecewise constants.
    /// Solves the between-jump transport equation in `(s,t)`.
    pub fn unnormalized_g(&self, s: f64) -> f64 {
        let p = &self.params;
        let dt = self.t - self.last_jump();
        let growth = (p.theta() * (p.alpha() - p.tau()) * dt).exp();
        growth
            * self.raw_current_poly().eval(s)
            * (self.script_a - s * self.script_c).powf(-self.shape())
    }

    /// Posterior as a Gamma law; exact only while no jump has been seen.
    pub fn prior_law(&self) -> Option<GammaLaw> {
        if self.n == 0 {
            GammaLaw::new(self.shape(), self.rate()).ok()
        } else {
            None
        }
    }
}

/// One row of a filter trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub n: usize,
    pub rate: f64,
    pub lambda_hat: f64,
    pub mgf: Vec<f64>,
    pub survival: Vec<f64>,
}

fn trace_row(state: &FilterState, mgf_s: &[f64], horizons: &[f64]) -> Result<TraceRow> {
    Ok(TraceRow {
        t: state.t(),
        n: state.n(),
        rate: state.rate(),
        lambda_hat: state.conditional_mean(),
        mgf: mgf_s
            .iter()
            .map(|&s| state.conditional_mgf(s))
            .collect::<Result<_>>()?,
        survival: horizons
            .iter()
            .map(|&h| state.conditional_survival(h))
            .collect::<Result<_>>()?,
    })
}

/// Run the filter across `jumps` and report at every query time. Each
/// jump inside the query range contributes two rows, just before and just
/// after the update.
pub fn filter_trace(
    params: &ModelParams,
    phi: f64,
    jumps: &JumpRecord,
    query: &[f64],
    mgf_s: &[f64],
    horizons: &[f64],
) -> Result<Vec<TraceRow>> {
    if query.windows(2).any(|w| !(w[0] <= w[1])) || query.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidInput(
            "query grid must be nonnegative and nondecreasing".into(),
        ));
    }
    let end = query.last().copied().unwrap_or(0.0);
    let mut state = FilterState::init(params, phi)?;
    let mut rows = Vec::new();
    let mut jump_iter = jumps
        .times()
        .iter()
        .copied()
        .filter(|&t| t <= end)
        .peekable();
    for &t in query {
        while let Some(&tj) = jump_iter.peek() {
            if tj > t {
                break;
            }
            state = state.advance(tj)?;
            rows.push(trace_row(&state, mgf_s, horizons)?);
            state = state.jump_update()?;
            rows.push(trace_row(&state, mgf_s, horizons)?);
            jump_iter.next();
        }
        if rows.last().is_none_or(|r| r.t != t) {
            state = state.advance(t)?;
            rows.push(trace_row(&state, mgf_s, horizons)?);
        }
    }
    Ok(rows)
}
