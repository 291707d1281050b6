//! Independent numerical oracles for the exact filter.

pub mod particle;
pub mod pde;

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::params::{GammaLaw, JumpRecord, ModelParams};
use crate::simulation::{simulate_scenario, InitialIntensity};

pub use particle::{
    particle_filter, ConstantIntensity, Estimate, IntensityDynamics, ParticleCloud,
    ParticleFilterConfig, PfPoint,
};
pub use pde::{pde_between_jumps, Boundaries, PdeCoefficients, PdeGrid, PdeSolver};

/// Grid settings for [`pde_filter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOracleConfig {
    pub nodes: usize,
    pub left: f64,
    pub right_cap: f64,
    pub tolerance: f64,
}

impl Default for PdeOracleConfig {
    fn default() -> Self {
        Self {
            nodes: 2001,
            left: -5.0,
            right_cap: 2.0,
            tolerance: pde::DEFAULT_TOLERANCE,
        }
    }
}

/// Conditional MGF values from the PDE oracle at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeOraclePoint {
    pub t: f64,
    pub n: usize,
    pub s: Vec<f64>,
    pub mgf: Vec<f64>,
}

/// Grid nodes for the CIR transform oracle: both edges are outflow edges
/// and the right edge stays well below the prior rate. The spacing is
/// shrunk to the nearest `1/(10m)` so every multiple of 0.1 is a node.
pub fn oracle_nodes(params: &ModelParams, phi: f64, cfg: &PdeOracleConfig) -> Result<Vec<f64>> {
    let lower_root = (params.alpha() - params.tau()) / params.rho();
    let upper_root = (params.alpha() + params.tau()) / params.rho();
    let left = cfg.left.min(lower_root - 0.5);
    let right = (0.5 * phi).min(cfg.right_cap).min(0.9 * upper_root);
    let h = (right - left) / (cfg.nodes.max(2) as f64 - 1.0);
    let per_tenth = (0.1 / h).ceil();
    PdeGrid::uniform(left, right, 0.1 / per_tenth)
}

/// End-to-end numerical filter: start from the Gamma prior transform on a
/// grid, integrate the between-jump equation, and at each jump replace the
/// grid by its `s`-derivative. Reports `g(s,t)/g(0,t)` at every node `s`
/// in `s_eval` (nodes are snapped to the grid) for each time in `times`,
/// taken after any jump at that time.
pub fn pde_filter(
    params: &ModelParams,
    phi: f64,
    jumps: &JumpRecord,
    times: &[f64],
    s_eval: &[f64],
    cfg: &PdeOracleConfig,
) -> Result<Vec<PdeOraclePoint>> {
    let prior = GammaLaw::new(2.0 * params.theta(), phi)?;
    let nodes = oracle_nodes(params, phi, cfg)?;
    let mut grid = PdeGrid::sample(nodes, 0.0, |s| prior.mgf(s).unwrap_or(f64::NAN))?;
    let h = grid.spacing();
    let snapped: Vec<f64> = s_eval
        .iter()
        .map(|&s| grid.s_nodes[0] + ((s - grid.s_nodes[0]) / h).round() * h)
        .collect();
    let mut solver = PdeSolver::new(PdeCoefficients::from_params(params));
    solver.tolerance = cfg.tolerance;
    let mut pending = jumps.times().iter().copied().peekable();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(&tj) = pending.peek() {
            if tj > t {
                break;
            }
            grid = solver
                .solve(&grid, &[tj], Boundaries::default())?
                .pop()
                .expect("one output per requested time");
            grid = grid.differentiate();
            pending.next();
        }
        grid = solver
            .solve(&grid, &[t], Boundaries::default())?
            .pop()
            .expect("one output per requested time");
        let g0 = grid.value_at_zero()?;
        let mgf = snapped
            .iter()
            .map(|&s| {
                grid.node_index(s)
                    .map(|i| grid.values[i] / g0)
                    .ok_or_else(|| Error::InvalidGrid(format!("s = {s} outside the grid")))
            })
            .collect::<Result<_>>()?;
        out.push(PdeOraclePoint {
            t,
            n: jumps.count_until(t),
            s: snapped.clone(),
            mgf,
        });
    }
    Ok(out)
}

/// Settings for the particle-filter concordance study.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    /// `(params, φ)` pairs cycled across scenarios.
    pub parameter_sets: Vec<(ModelParams, f64)>,
    pub scenarios: usize,
    pub particles: usize,
    pub replicates: usize,
    pub horizon: f64,
    pub max_jumps: usize,
    pub queries_per_scenario: usize,
    pub pf_step: f64,
    pub sim_step: f64,
    pub seed: u64,
    /// Fraction of checks allowed beyond `|z| = 3`.
    pub false_positive_budget: f64,
}

impl ValidationConfig {
    /// Reference parameters plus two contrasting sets.
    pub fn default_parameter_sets() -> Vec<(ModelParams, f64)> {
        vec![
            (ModelParams::new(0.5, 0.4, 0.5).expect("valid"), 4.0),
            (ModelParams::new(1.0, 1.0, 0.8).expect("valid"), 2.0),
            (ModelParams::new(0.3, 2.0, 0.4).expect("valid"), 1.0),
        ]
    }
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            parameter_sets: Self::default_parameter_sets(),
            scenarios: 20,
            particles: 100_000,
            replicates: 40,
            horizon: 5.0,
            max_jumps: 8,
            queries_per_scenario: 10,
            pf_step: 0.01,
            sim_step: 1e-3,
            seed: 2024,
            false_positive_budget: 0.01,
        }
    }
}

/// One exact-versus-particle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub scenario: usize,
    pub t: f64,
    pub n: usize,
    pub exact_lambda_hat: f64,
    pub pf_estimate: f64,
    pub pf_se: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<OracleRow>,
    pub exceedances: usize,
    pub allowed: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.exceedances <= self.allowed
    }
}

/// Simulate a scenario, capping the number of jumps by shortening the
/// horizon to halfway between the last kept jump and the next one.
pub fn capped_scenario(
    params: &ModelParams,
    phi: f64,
    horizon: f64,
    max_jumps: usize,
    sim_step: f64,
    seed: u64,
) -> Result<(JumpRecord, f64)> {
    let prior = GammaLaw::new(2.0 * params.theta(), phi)?;
    let sim = simulate_scenario(
        params,
        InitialIntensity::Prior(prior),
        horizon,
        sim_step,
        seed,
    )?;
    let times = sim.jumps.times();
    if times.len() <= max_jumps {
        return Ok((sim.jumps, horizon));
    }
    let end = if max_jumps == 0 {
        0.5 * times[0]
    } else {
        0.5 * (times[max_jumps - 1] + times[max_jumps])
    };
    Ok((JumpRecord::new(times[..max_jumps].to_vec())?, end))
}

/// Exact `λ̂_t` against the particle filter over simulated scenarios.
pub fn validate(cfg: &ValidationConfig) -> Result<ValidationReport> {
    if cfg.parameter_sets.is_empty() {
        return Err(Error::InvalidInput("no parameter sets".into()));
    }
    let mut rows = Vec::new();
    for k in 0..cfg.scenarios {
        let (params, phi) = cfg.parameter_sets[k % cfg.parameter_sets.len()];
        let seed = cfg.seed.wrapping_add(k as u64);
        let (jumps, end) =
            capped_scenario(&params, phi, cfg.horizon, cfg.max_jumps, cfg.sim_step, seed)?;
        let q = cfg.queries_per_scenario;
        let query: Vec<f64> = (1..=q).map(|i| end * i as f64 / q as f64).collect();
        let prior = GammaLaw::new(2.0 * params.theta(), phi)?;
        let pf = particle_filter(
            &jumps,
            &params,
            &prior,
            &query,
            &[],
            &ParticleFilterConfig {
                n_particles: cfg.particles,
                replicates: cfg.replicates,
                step: cfg.pf_step,
                seed: seed ^ 0x9e37_79b9_7f4a_7c15,
            },
        )?;
        for point in pf {
            let exact = FilterState::at(&params, phi, &jumps, point.t)?.conditional_mean();
            let se = point.lambda_hat.se;
            rows.push(OracleRow {
                scenario: k,
                t: point.t,
                n: point.n,
                exact_lambda_hat: exact,
                pf_estimate: point.lambda_hat.value,
                pf_se: se,
                z_score: (point.lambda_hat.value - exact) / se,
            });
        }
    }
    let exceedances = rows.iter().filter(|r| !(r.z_score.abs() <= 3.0)).count();
    let allowed = (cfg.false_positive_budget * rows.len() as f64).floor() as usize;
    Ok(ValidationReport {
        rows,
        exceedances,
        allowed,
    })
}
