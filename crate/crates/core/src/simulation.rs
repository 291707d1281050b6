//! Ground-truth scenario generation: CIR intensity paths and the Cox
//! process jump times they drive.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by
//! `(seed, stream)`, so outputs are pure functions of their inputs and do
//! not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::params::{GammaLaw, JumpRecord, ModelParams};

/// Default simulation grid step.
pub const DEFAULT_STEP: f64 = 1e-3;

// Stream ids used by `simulate_scenario`.
const STREAM_INITIAL: u64 = 0;
const STREAM_PATH: u64 = 1;
const STREAM_JUMPS: u64 = 2;

/// Deterministic RNG for the given seed and stream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Discretisation scheme for the intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Noncentral chi-square transition, no discretisation bias.
    #[default]
    Exact,
    /// Euler with full truncation, for cross-checking only.
    EulerFullTruncation,
}

/// Exact CIR transition over a fixed step `h`:
/// `λ_{t+h} = c · χ'²_d(λ_t e^{−αh}/c)` with `c = β²(1 − e^{−αh})/(4α)`
/// and `d = 4αμ₀/β²`.
#[derive(Debug, Clone, Copy)]
pub struct CirTransition {
    scale: f64,
    dof: f64,
    decay: f64,
}

impl CirTransition {
    pub fn new(params: &ModelParams, h: f64) -> Self {
        let decay = (-params.alpha() * h).exp();
        let scale = -params.rho() * (-params.alpha() * h).exp_m1() / (4.0 * params.alpha());
        let dof = 4.0 * params.alpha() * params.mu0() / params.rho();
        Self { scale, dof, decay }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let nc = x.max(0.0) * self.decay / self.scale;
        self.scale * sample_noncentral_chi2(self.dof, nc, rng)
    }
}

/// Noncentral chi-square via its Poisson mixture of central chi-squares.
/// Huge degrees of freedom (vanishing volatility) use the normal limit.
pub fn sample_noncentral_chi2<R: Rng + ?Sized>(dof: f64, nc: f64, rng: &mut R) -> f64 {
    if dof + nc > 1e10 {
        let z: f64 = rng.sample(StandardNormal);
        return (dof + nc + z * (2.0 * (dof + 2.0 * nc)).sqrt()).max(0.0);
    }
    let extra = if nc > 0.0 {
        Poisson::new(0.5 * nc)
            .expect("finite positive Poisson mean")
            .sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * dof + extra;
    2.0 * Gamma::new(shape, 1.0)
        .expect("positive gamma shape")
        .sample(rng)
}

/// Intensity sampled on a uniform grid (last step may be shorter so the
/// grid ends exactly at the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    pub grid: Vec<f64>,
    pub intensity: Vec<f64>,
    pub step: f64,
}

impl IntensityPath {
    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap_or(&0.0)
    }

    /// Constant-intensity path, mostly for tests.
    pub fn constant(level: f64, horizon: f64, step: f64) -> Result<Self> {
        let grid = make_grid(horizon, step)?;
        let intensity = vec![level; grid.len()];
        Ok(Self {
            grid,
            intensity,
            step,
        })
    }

    /// Trapezoidal integral of the intensity over `[0, t]`.
    pub fn integrated_hazard(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for w in 0..self.grid.len().saturating_sub(1) {
            let (t0, t1) = (self.grid[w], self.grid[w + 1]);
            if t0 >= t {
                break;
            }
            let (l0, l1) = (self.intensity[w], self.intensity[w + 1]);
            if t1 <= t {
                acc += 0.5 * (l0 + l1) * (t1 - t0);
            } else {
                let d = t - t0;
                let slope = (l1 - l0) / (t1 - t0);
                acc += l0 * d + 0.5 * slope * d * d;
            }
        }
        acc
    }

    /// Linear interpolation of the intensity at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g <= t);
        if i == 0 {
            return self.intensity[0];
        }
        if i >= self.grid.len() {
            return *self.intensity.last().unwrap();
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let w = (t - t0) / (t1 - t0);
        self.intensity[i - 1] * (1.0 - w) + self.intensity[i] * w
    }
}

fn make_grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() || !horizon.is_finite() || !(horizon > step) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < step < horizon (step = {step}, horizon = {horizon})"
        )));
    }
    let n = (horizon / step - 1e-9).ceil() as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    grid.push(horizon);
    Ok(grid)
}

/// Simulate the intensity from `lambda0` on `[0, horizon]`.
pub fn simulate_cir(
    params: &ModelParams,
    lambda0: f64,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<IntensityPath> {
    let mut rng = rng_for(seed, STREAM_PATH);
    simulate_cir_with(params, lambda0, horizon, step, Scheme::Exact, &mut rng)
}

pub fn simulate_cir_with<R: Rng + ?Sized>(
    params: &ModelParams,
    lambda0: f64,
    horizon: f64,
    step: f64,
    scheme: Scheme,
    rng: &mut R,
) -> Result<IntensityPath> {
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return Err(Error::InvalidInput(format!("lambda0 = {lambda0}")));
    }
    let grid = make_grid(horizon, step)?;
    let mut intensity = Vec::with_capacity(grid.len());
    intensity.push(lambda0);
    let full = CirTransition::new(params, step);
    let mut x = lambda0;
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        x = match scheme {
            Scheme::Exact => {
                if (h - step).abs() <= 1e-12 * step {
                    full.sample(x, rng)
                } else {
                    CirTransition::new(params, h).sample(x, rng)
                }
            }
            Scheme::EulerFullTruncation => {
                let xp = x.max(0.0);
                let z: f64 = rng.sample(StandardNormal);
                x + params.alpha() * (params.mu0() - xp) * h + params.beta() * (xp * h).sqrt() * z
            }
        };
        intensity.push(x.max(0.0));
    }
    Ok(IntensityPath {
        grid,
        intensity,
        step,
    })
}

/// Jump times of a Cox process driven by `path`: a jump occurs whenever the
/// integrated (piecewise-linear) intensity crosses the next partial sum of
/// independent standard exponentials.
pub fn simulate_cox_jumps(path: &IntensityPath, seed: u64) -> JumpRecord {
    let mut rng = rng_for(seed, STREAM_JUMPS);
    cox_jumps_with(path, &mut rng)
}

pub fn cox_jumps_with<R: Rng + ?Sized>(path: &IntensityPath, rng: &mut R) -> JumpRecord {
    let mut jumps = JumpRecord::empty();
    let mut remaining: f64 = rng.sample(Exp1);
    for w in 0..path.grid.len().saturating_sub(1) {
        let (t0, t1) = (path.grid[w], path.grid[w + 1]);
        let h = t1 - t0;
        let (mut l0, l1) = (path.intensity[w], path.intensity[w + 1]);
        let slope = (l1 - l0) / h;
        let mut start = t0;
        loop {
            let left = t1 - start;
            let hazard = l0 * left + 0.5 * slope * left * left;
            if hazard < remaining {
                remaining -= hazard;
                break;
            }
            // solve l0 δ + slope δ²/2 = remaining
            let disc = (l0 * l0 + 2.0 * slope * remaining).max(0.0);
            let delta = (2.0 * remaining / (l0 + disc.sqrt())).min(left);
            let mut t = start + delta;
            if let Some(last) = jumps.last() {
                if t <= last {
                    t = last.next_up();
                }
            }
            if t > 0.0 && jumps.push(t).is_err() {
                break;
            }
            l0 += slope * (t - start);
            start = t;
            remaining = rng.sample(Exp1);
        }
    }
    jumps
}

/// Initial intensity drawn from the shape/rate Gamma law.
pub fn draw_initial_intensity(law: &GammaLaw, seed: u64) -> f64 {
    let mut rng = rng_for(seed, STREAM_INITIAL);
    sample_gamma(law, &mut rng)
}

pub fn sample_gamma<R: Rng + ?Sized>(law: &GammaLaw, rng: &mut R) -> f64 {
    Gamma::new(law.shape(), 1.0 / law.rate())
        .expect("validated gamma law")
        .sample(rng)
}

/// How the initial intensity is chosen for a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialIntensity {
    Fixed(f64),
    Prior(GammaLaw),
}

/// A simulated scenario: latent intensity plus the observed jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub path: IntensityPath,
    pub jumps: JumpRecord,
    pub seed: u64,
}

impl SimPath {
    pub fn grid(&self) -> &[f64] {
        &self.path.grid
    }

    pub fn intensity(&self) -> &[f64] {
        &self.path.intensity
    }

    pub fn step(&self) -> f64 {
        self.path.step
    }
}

pub fn simulate_scenario(
    params: &ModelParams,
    initial: InitialIntensity,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<SimPath> {
    let lambda0 = match initial {
        InitialIntensity::Fixed(x) => x,
        InitialIntensity::Prior(law) => draw_initial_intensity(&law, seed),
    };
    let path = simulate_cir(params, lambda0, horizon, step, seed)?;
    let jumps = simulate_cox_jumps(&path, seed);
    Ok(SimPath { path, jumps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> ModelParams {
        ModelParams::new(0.5, 0.4, 0.5).unwrap()
    }

    #[test]
    fn invalid_grid() {
        assert!(matches!(
            simulate_cir(&reference_params(), 0.4, 1.0, 1.0, 0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            simulate_cir(&reference_params(), 0.4, 1.0, 0.0, 0),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn grid_ends_at_horizon() {
        let p = simulate_cir(&reference_params(), 0.4, 1.05, 0.1, 3).unwrap();
        assert_eq!(*p.grid.last().unwrap(), 1.05);
        assert_eq!(p.grid.len(), 12);
        assert!(p.intensity.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = simulate_scenario(
            &reference_params(),
            InitialIntensity::Fixed(0.4),
            5.0,
            0.01,
            11,
        )
        .unwrap();
        let b = simulate_scenario(
            &reference_params(),
            InitialIntensity::Fixed(0.4),
            5.0,
            0.01,
            11,
        )
        .unwrap();
        let c = simulate_scenario(
            &reference_params(),
            InitialIntensity::Fixed(0.4),
            5.0,
            0.01,
            12,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a.path, c.path);
        let g = GammaLaw::new(1.6, 4.0).unwrap();
        assert_eq!(draw_initial_intensity(&g, 5), draw_initial_intensity(&g, 5));
    }

    #[test]
    fn vanishing_volatility_follows_ode() {
        let p = ModelParams::new(0.5, 0.4, 1e-8).unwrap();
        let lambda0 = 1.3;
        let path = simulate_cir(&p, lambda0, 10.0, 0.01, 1).unwrap();
        let worst = path
            .grid
            .iter()
            .zip(&path.intensity)
            .map(|(&t, &x)| (x - p.mean_at(lambda0, t)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max deviation {worst}");
    }

    #[test]
    fn zero_intensity_has_no_jumps() {
        let path = IntensityPath::constant(0.0, 10.0, 0.01).unwrap();
        assert!(simulate_cox_jumps(&path, 3).is_empty());
    }

    #[test]
    fn jumps_strictly_increasing_within_horizon() {
        let path = IntensityPath::constant(50.0, 10.0, 0.01).unwrap();
        let j = simulate_cox_jumps(&path, 9);
        assert!(j.len() > 300);
        assert!(j.times().windows(2).all(|w| w[0] < w[1]));
        assert!(j.last().unwrap() <= 10.0);
    }

    #[test]
    fn integrated_hazard_piecewise_linear() {
        let path = IntensityPath {
            grid: vec![0.0, 1.0, 2.0],
            intensity: vec![0.0, 2.0, 2.0],
            step: 1.0,
        };
        assert!((path.integrated_hazard(1.0) - 1.0).abs() < 1e-15);
        assert!((path.integrated_hazard(0.5) - 0.25).abs() < 1e-15);
        assert!((path.integrated_hazard(2.0) - 3.0).abs() < 1e-15);
        assert!((path.value_at(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn euler_fallback_stays_nonnegative() {
        let mut rng = rng_for(4, 0);
        let p = ModelParams::new(0.5, 0.1, 0.8).unwrap();
        let path =
            simulate_cir_with(&p, 0.05, 5.0, 0.01, Scheme::EulerFullTruncation, &mut rng).unwrap();
        assert!(path.intensity.iter().all(|&x| x >= 0.0));
    }
}
