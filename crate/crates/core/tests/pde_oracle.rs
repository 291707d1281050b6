use cirfilter::oracle::{
    pde_between_jumps, pde_filter, Boundaries, PdeCoefficients, PdeGrid, PdeOracleConfig, PdeSolver,
};
use cirfilter::{FilterState, GammaLaw, JumpRecord, ModelParams};

fn parameter_sets() -> Vec<(ModelParams, f64)> {
    vec![
        (ModelParams::new(0.5, 0.4, 0.5).unwrap(), 4.0),
        (ModelParams::new(1.0, 1.0, 0.8).unwrap(), 2.0),
        (ModelParams::new(0.3, 2.0, 0.4).unwrap(), 1.0),
    ]
}

fn s_nodes() -> Vec<f64> {
    (0..=30).map(|i| -3.0 + 0.1 * i as f64).collect()
}

#[test]
fn no_jump_rate_matches_closed_form() {
    let (p, phi) = parameter_sets()[0];
    let pts = pde_filter(
        &p,
        phi,
        &JumpRecord::empty(),
        &[1.0],
        &[-1.0, -0.5],
        &PdeOracleConfig::default(),
    )
    .unwrap();
    let state = FilterState::at(&p, phi, &JumpRecord::empty(), 1.0).unwrap();
    // a Gamma(2θ, Q) transform: recover Q from the ratio at two points
    let (f1, f2) = (pts[0].mgf[0], pts[0].mgf[1]);
    let shape = 2.0 * p.theta();
    let r1 = f1.powf(-1.0 / shape); // (Q+1)/Q
    let r2 = f2.powf(-1.0 / shape); // (Q+0.5)/Q
    let q1 = 1.0 / (r1 - 1.0);
    let q2 = 0.5 / (r2 - 1.0);
    assert!(
        (q1 - state.rate()).abs() < 1e-6 * state.rate(),
        "{q1} vs {}",
        state.rate()
    );
    assert!((q2 - state.rate()).abs() < 1e-6 * state.rate());
}

#[test]
fn pde_filter_matches_closed_form_through_two_jumps() {
    for (p, phi) in parameter_sets() {
        let jumps = JumpRecord::new(vec![0.8, 1.7]).unwrap();
        let times: Vec<f64> = (1..=27).map(|i| 0.1 * i as f64).collect();
        let pts = pde_filter(
            &p,
            phi,
            &jumps,
            &times,
            &s_nodes(),
            &PdeOracleConfig::default(),
        )
        .unwrap();
        let mut worst = 0.0f64;
        for pt in &pts {
            let state = FilterState::at(&p, phi, &jumps, pt.t).unwrap();
            for (s, v) in pt.s.iter().zip(&pt.mgf) {
                let exact = state.conditional_mgf(*s).unwrap();
                worst = worst.max((v - exact).abs() / exact);
            }
        }
        assert!(worst < 1e-5, "params {p:?}: worst relative error {worst:e}");
    }
}

#[test]
fn between_jumps_matches_gamma_closed_form() {
    let (p, phi) = parameter_sets()[1];
    let cfg = PdeOracleConfig::default();
    let nodes = cirfilter::oracle::oracle_nodes(&p, phi, &cfg).unwrap();
    let prior = GammaLaw::new(2.0 * p.theta(), phi).unwrap();
    let g0 = PdeGrid::sample(nodes, 0.0, |s| prior.mgf(s).unwrap()).unwrap();
    let out = pde_between_jumps(&g0, PdeCoefficients::from_params(&p), &[0.5, 1.0]).unwrap();
    for grid in out {
        let state = FilterState::at(&p, phi, &JumpRecord::empty(), grid.t).unwrap();
        for s in s_nodes() {
            let v = grid.normalized_at(s).unwrap();
            let exact = state.conditional_mgf(s).unwrap();
            assert!(
                (v - exact).abs() < 1e-6 * exact,
                "t={} s={s}: {v} vs {exact}",
                grid.t
            );
        }
    }
}

fn transport_error(h: f64) -> f64 {
    // ∂_t g = −∂_s g with g(s, 0) = w(s) has solution w(s − t)
    let w = |s: f64| (4.0 / (4.0 - s)).powi(2);
    let nodes = PdeGrid::uniform(-3.0, 1.0, h).unwrap();
    let g0 = PdeGrid::sample(nodes, 0.0, w).unwrap();
    let left_edge = g0.s_nodes[0];
    let inflow = move |t: f64| w(left_edge - t);
    let mut solver = PdeSolver::new(PdeCoefficients::constant_intensity());
    solver.tolerance = 1e-13;
    let out = solver
        .solve(
            &g0,
            &[1.0],
            Boundaries {
                left: Some(&inflow),
                right: None,
            },
        )
        .unwrap();
    let g = &out[0];
    g.s_nodes
        .iter()
        .zip(&g.values)
        .map(|(s, v)| (v - w(s - 1.0)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_intensity_transport_is_exact_to_grid_order() {
    assert!(transport_error(0.01) < 1e-8);
}

#[test]
fn transport_converges_at_fourth_order() {
    let coarse = transport_error(0.1);
    let fine = transport_error(0.05);
    assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
}
