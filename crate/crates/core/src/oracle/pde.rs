//! Method-of-lines solver for the unnormalised transform between jumps,
//!
//! ```text
//! ∂_t g = μ₀α s g + (ρs²/2 − αs − 1) ∂_s g,
//! ```
//!
//! plus the at-jump map `g ↦ ∂_s g` applied to the grid. Spatial
//! derivatives use five-point, fourth-order stencils biased towards the
//! upwind side of each node; time stepping is Dormand–Prince 5(4) with
//! an adaptive step.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Local error tolerance of the adaptive time stepper.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Coefficients of the transport equation. Zeros are allowed, which gives
/// the constant-intensity model `∂_t g = −∂_s g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeCoefficients {
    pub alpha: f64,
    pub mu0: f64,
    pub rho: f64,
}

impl PdeCoefficients {
    pub fn from_params(p: &ModelParams) -> Self {
        Self {
            alpha: p.alpha(),
            mu0: p.mu0(),
            rho: p.rho(),
        }
    }

    pub fn constant_intensity() -> Self {
        Self {
            alpha: 0.0,
            mu0: 0.0,
            rho: 0.0,
        }
    }

    /// Coefficient of `∂_s g`.
    pub fn advection(&self, s: f64) -> f64 {
        0.5 * self.rho * s * s - self.alpha * s - 1.0
    }

    /// Coefficient of `g`.
    pub fn reaction(&self, s: f64) -> f64 {
        self.mu0 * self.alpha * s
    }
}

/// Grid samples of `g(·, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    pub s_nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl PdeGrid {
    /// Uniform nodes from `left` to at least `right` with spacing `h`,
    /// placed so that `s = 0` is a node.
    pub fn uniform(left: f64, right: f64, h: f64) -> Result<Vec<f64>> {
        if !(left < 0.0 && right > 0.0 && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need left < 0 < right and h > 0 (left = {left}, right = {right}, h = {h})"
            )));
        }
        let below = (-left / h).round() as i64;
        let above = (right / h).round() as i64;
        Ok((-below..=above).map(|i| i as f64 * h).collect())
    }

    /// Sample `f` on `nodes`.
    pub fn sample(nodes: Vec<f64>, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
        let grid = Self {
            s_nodes: nodes,
            values,
            t,
        };
        if !(grid.value_at_zero()? > 0.0) {
            return Err(Error::InvalidInput("g(0) must be positive".into()));
        }
        Ok(grid)
    }

    pub fn spacing(&self) -> f64 {
        self.s_nodes[1] - self.s_nodes[0]
    }

    pub fn node_index(&self, s: f64) -> Option<usize> {
        let h = self.spacing();
        let i = ((s - self.s_nodes[0]) / h).round();
        if i < 0.0 || i as usize >= self.s_nodes.len() {
            return None;
        }
        let i = i as usize;
        ((self.s_nodes[i] - s).abs() <= 1e-9 * h).then_some(i)
    }

    pub fn value_at_zero(&self) -> Result<f64> {
        self.node_index(0.0)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::InvalidGrid("s = 0 is not a grid node".into()))
    }

    /// `g(s,t)/g(0,t)` at the node `s`.
    pub fn normalized_at(&self, s: f64) -> Result<f64> {
        let i = self
            .node_index(s)
            .ok_or_else(|| Error::InvalidGrid(format!("s = {s} is not a grid node")))?;
        Ok(self.values[i] / self.value_at_zero()?)
    }

    /// At-jump update `g ↦ ∂_s g` by fourth-order differences (central in
    /// the interior, one-sided at the edges).
    pub fn differentiate(&self) -> PdeGrid {
        let n = self.values.len();
        let values = (0..n)
            .map(|i| {
                let start = i.saturating_sub(2).min(n - 5);
                let w = stencil_weights(&self.s_nodes[start..start + 5], self.s_nodes[i]);
                w.iter()
                    .zip(&self.values[start..start + 5])
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
            })
            .collect();
        PdeGrid {
            s_nodes: self.s_nodes.clone(),
            values,
            t: self.t,
        }
    }
}

/// First-derivative finite-difference weights at `x0` for arbitrary nodes
/// (Fornberg's recursion).
fn stencil_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    // c[j][k]: weight of node j for derivative order k (k = 0, 1)
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Value imposed on an inflow boundary node, as a function of time.
pub type BoundaryFn<'a> = &'a dyn Fn(f64) -> f64;

/// Boundary data. Only needed where characteristics enter the domain; the
/// CIR problems on `[−5, s_max]` with `s_max` below the positive root of
/// the advection coefficient have outflow at both ends.
#[derive(Clone, Copy, Default)]
pub struct Boundaries<'a> {
    pub left: Option<BoundaryFn<'a>>,
    pub right: Option<BoundaryFn<'a>>,
}

struct Operator<'a> {
    advection: Vec<f64>,
    reaction: Vec<f64>,
    weights: Vec<(usize, [f64; 5])>,
    left: Option<BoundaryFn<'a>>,
    right: Option<BoundaryFn<'a>>,
}

impl<'a> Operator<'a> {
    fn new(nodes: &[f64], coeffs: PdeCoefficients, bounds: Boundaries<'a>) -> Result<Self> {
        let n = nodes.len();
        if n < 6 {
            return Err(Error::InvalidGrid("need at least 6 nodes".into()));
        }
        let advection: Vec<f64> = nodes.iter().map(|&s| coeffs.advection(s)).collect();
        let reaction = nodes.iter().map(|&s| coeffs.reaction(s)).collect();
        // inflow at the left edge when characteristics move right (a < 0)
        if advection[0] < 0.0 && bounds.left.is_none() {
            return Err(Error::InvalidGrid(
                "left boundary is an inflow boundary; boundary data required".into(),
            ));
        }
        if advection[n - 1] > 0.0 && bounds.right.is_none() {
            return Err(Error::InvalidGrid(
                "right boundary is an inflow boundary; boundary data required".into(),
            ));
        }
        let weights = (0..n)
            .map(|i| {
                // ∂_t g = a ∂_s g: for a > 0 information arrives from the right
                let offset: i64 = match advection[i] {
                    a if a > 0.0 => -1,
                    a if a < 0.0 => -3,
                    _ => -2,
                };
                let start = (i as i64 + offset).clamp(0, n as i64 - 5) as usize;
                let w = stencil_weights(&nodes[start..start + 5], nodes[i]);
                (start, [w[0], w[1], w[2], w[3], w[4]])
            })
            .collect();
        let left = bounds.left.filter(|_| advection[0] < 0.0);
        let right = bounds.right.filter(|_| advection[n - 1] > 0.0);
        Ok(Self {
            advection,
            reaction,
            weights,
            left,
            right,
        })
    }

    fn rhs(&self, t: f64, g: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (start, w) = &self.weights[i];
            let gs: f64 = w
                .iter()
                .zip(&g[*start..*start + 5])
                .map(|(w, v)| w * v)
                .sum();
            *o = self.advection[i] * gs + self.reaction[i] * g[i];
        }
        let n = out.len();
        if let Some(f) = self.left {
            out[0] = time_derivative(f, t);
        }
        if let Some(f) = self.right {
            out[n - 1] = time_derivative(f, t);
        }
    }
}

fn time_derivative(f: BoundaryFn<'_>, t: f64) -> f64 {
    let h = 1e-3;
    (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Method-of-lines integrator with its settings.
#[derive(Debug, Clone, Copy)]
pub struct PdeSolver {
    pub coeffs: PdeCoefficients,
    pub tolerance: f64,
    pub max_steps: usize,
}

impl PdeSolver {
    pub fn new(coeffs: PdeCoefficients) -> Self {
        Self {
            coeffs,
            tolerance: DEFAULT_TOLERANCE,
            max_steps: 1_000_000,
        }
    }

    /// Integrate from `initial.t` through each of `times` (increasing),
    /// returning the grid at every requested time.
    pub fn solve(
        &self,
        initial: &PdeGrid,
        times: &[f64],
        bounds: Boundaries<'_>,
    ) -> Result<Vec<PdeGrid>> {
        let op = Operator::new(&initial.s_nodes, self.coeffs, bounds)?;
        let n = initial.values.len();
        let mut y = initial.values.clone();
        let mut t = initial.t;
        let max_speed = op.advection.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let mut h = 0.5 * initial.spacing() / max_speed.max(1e-12);
        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut out = Vec::with_capacity(times.len());
        let mut steps = 0usize;
        for &target in times {
            if target < t {
                return Err(Error::TimeRegression {
                    current: t,
                    requested: target,
                });
            }
            op.rhs(t, &y, &mut k[0]);
            // a gap of a few ulps is rounding, not time to integrate over
            if target - t <= 1e-13 * (1.0 + t.abs()) {
                t = target;
            }
            while t < target {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::StepFailure { t, h });
                }
                let last = t + h >= target;
                let step = if last { target - t } else { h };
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += step * A[s][j] * kj[i];
                        }
                        stage[i] = acc;
                    }
                    op.rhs(t + C[s] * step, &stage, &mut k[s]);
                }
                let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mut err = 0.0f64;
                for i in 0..n {
                    let mut hi = y[i];
                    let mut lo = y[i];
                    for s in 0..7 {
                        hi += step * B5[s] * k[s][i];
                        lo += step * B4[s] * k[s][i];
                    }
                    y5[i] = hi;
                    let tol = self.tolerance * (hi.abs().max(y[i].abs()) + 1e-3 * scale);
                    err = err.max((hi - lo).abs() / tol);
                }
                if !err.is_finite() {
                    return Err(Error::StepFailure { t, h: step });
                }
                if err <= 1.0 {
                    t = if last { target } else { t + step };
                    std::mem::swap(&mut y, &mut y5);
                    // first-same-as-last: k[6] holds f(t + step, y_new)
                    let (first, rest) = k.split_at_mut(1);
                    first[0].copy_from_slice(&rest[5]);
                }
                let factor = 0.9 * err.max(1e-10).powf(-0.2);
                h = step * factor.clamp(0.2, 5.0);
                if err <= 1.0 && last {
                    h = h.max(step);
                }
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::StepFailure { t, h });
                }
            }
            out.push(PdeGrid {
                s_nodes: initial.s_nodes.clone(),
                values: y.clone(),
                t,
            });
        }
        Ok(out)
    }
}

/// Convenience wrapper: integrate `initial` to each time in `times`.
pub fn pde_between_jumps(
    initial: &PdeGrid,
    coeffs: PdeCoefficients,
    times: &[f64],
) -> Result<Vec<PdeGrid>> {
    PdeSolver::new(coeffs).solve(initial, times, Boundaries::default())
}
