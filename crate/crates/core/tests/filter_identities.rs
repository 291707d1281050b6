mod common;

use cirfilter::filter::abc::{a_fn, b_fn, c_fn};
use cirfilter::{FilterState, JumpRecord, ModelParams};
use common::{parameter_sets, reference_params};
use proptest::prelude::*;

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

fn params_strategy() -> impl Strategy<Value = (ModelParams, f64)> {
    (0.05..3.0f64, 0.05..3.0f64, 0.05..2.0f64, 0.3..6.0f64)
        .prop_map(|(a, m, b, phi)| (ModelParams::new(a, m, b).unwrap(), phi))
}

/// Random reachable state: parameters, up to six jumps and a query time.
fn state_strategy() -> impl Strategy<Value = FilterState> {
    (
        params_strategy(),
        prop::collection::vec(0.05..1.5f64, 0..=6),
        0.0..1.0f64,
    )
        .prop_map(|((p, phi), gaps, tail)| {
            let mut t = 0.0;
            let times: Vec<f64> = gaps
                .iter()
                .map(|g| {
                    t += g;
                    t
                })
                .collect();
            let jumps = JumpRecord::new(times).unwrap();
            FilterState::at(&p, phi, &jumps, t + tail).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn abc_identities(
        (p, _) in params_strategy(),
        x in 0.01..10.0f64,
        y in 0.01..10.0f64,
        s in -10.0..10.0f64,
        t in 0.0..5.0f64,
    ) {
        let two_tau = 2.0 * p.tau();
        // (i), (ii): A and C at zero elapsed time
        prop_assert!(close(a_fn(x, 0.0, y, &p), two_tau * x, two_tau * x, 1e-12));
        prop_assert!(close(c_fn(x, 0.0, y, &p), two_tau * y, two_tau * y, 1e-12));
        prop_assert!(close(b_fn(s, 0.0, &p), two_tau, two_tau, 1e-12));
        // (iii): x B(s,t) − y C(−2/ρ, t, s) = A(x,t,y) − s C(x,t,y)
        let l1 = x * b_fn(s, t, &p);
        let l2 = y * c_fn(-2.0 / p.rho(), t, s, &p);
        let r1 = a_fn(x, t, y, &p);
        let r2 = s * c_fn(x, t, y, &p);
        let scale = l1.abs() + l2.abs() + r1.abs() + r2.abs();
        prop_assert!(close(l1 - l2, r1 - r2, scale, 1e-12), "{} vs {}", l1 - l2, r1 - r2);
        // C(−2/ρ, 0, s) = 2τs
        let c0 = c_fn(-2.0 / p.rho(), 0.0, s, &p);
        prop_assert!(close(c0, two_tau * s, two_tau * (1.0 + s.abs()), 1e-12));
    }

    #[test]
    fn tau_identity((p, _) in params_strategy()) {
        let (a, tau, rho) = (p.alpha(), p.tau(), p.rho());
        prop_assert!(close((a + tau) * (tau - a), 2.0 * rho, tau * tau, 1e-12));
    }

    #[test]
    fn mgf_is_one_at_zero(state in state_strategy()) {
        prop_assert_eq!(state.conditional_mgf(0.0).unwrap(), 1.0);
        prop_assert!(state.rate() > 0.0);
    }

    #[test]
    fn advance_is_a_flow(state in state_strategy(), d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
        let t1 = state.t() + d1;
        let t2 = t1 + d2;
        let two_step = state.advance(t1).unwrap().advance(t2).unwrap();
        let one_step = state.advance(t2).unwrap();
        prop_assert_eq!(two_step.t(), one_step.t());
        prop_assert_eq!(two_step.n(), one_step.n());
        prop_assert_eq!(two_step.poly_snapshot(), one_step.poly_snapshot());
        prop_assert_eq!(two_step.snapshot_a(), one_step.snapshot_a());
        prop_assert_eq!(two_step.snapshot_c(), one_step.snapshot_c());
        prop_assert!(close(two_step.script_a(), one_step.script_a(), one_step.script_a(), 1e-12));
        prop_assert!(close(two_step.script_c(), one_step.script_c(), one_step.script_c(), 1e-12));
    }

    #[test]
    fn current_polynomial_has_degree_n(state in state_strategy(), d in 0.05..1.0f64) {
        // the leading coefficient can be tiny in the monomial basis, so only
        // exact vanishing counts as a lower degree
        let later = state.advance(state.t() + d).unwrap();
        let q = later.current_poly();
        prop_assert_eq!(q.formal_degree(), later.n());
        prop_assert_eq!(q.degree(0.0), later.n());
    }

    #[test]
    fn mean_jumps_up(state in state_strategy(), d in 0.01..1.0f64) {
        let before = state.advance(state.t() + d).unwrap();
        let after = before.jump_update().unwrap();
        prop_assert!(after.conditional_mean() > before.conditional_mean());
    }
}

/// Fourth-order central difference.
fn d4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn jump_scenario() -> JumpRecord {
    JumpRecord::new(vec![0.6, 1.1, 2.0]).unwrap()
}

/// `(s, t)` grid strictly inside the interval after the last jump.
fn grid(phi: f64) -> Vec<(f64, f64)> {
    let s_max = 0.4 * phi;
    let mut pts = Vec::new();
    for i in 0..20 {
        let s = -3.0 + (s_max + 3.0) * i as f64 / 19.0;
        for j in 0..20 {
            pts.push((s, 2.05 + 0.95 * j as f64 / 19.0));
        }
    }
    pts
}

#[test]
fn closed_form_g_solves_transport_equation() {
    let h = 1e-3;
    for (p, phi) in parameter_sets() {
        let jumps = jump_scenario();
        let (am, rho) = (p.alpha() * p.mu0(), p.rho());
        let mut worst = 0.0f64;
        for (s, t) in grid(phi) {
            let at = |t: f64| FilterState::at(&p, phi, &jumps, t).unwrap();
            let state = at(t);
            let g = state.unnormalized_g(s);
            let gt = d4(|u| at(u).unnormalized_g(s), t, h);
            let gs = d4(|v| state.unnormalized_g(v), s, h);
            let adv = 0.5 * rho * s * s - p.alpha() * s - 1.0;
            let rhs = am * s * g + adv * gs;
            let scale = gt.abs() + (am * s * g).abs() + (adv * gs).abs();
            worst = worst.max((gt - rhs).abs() / scale);
        }
        assert!(worst < 1e-6, "{p:?}: residual {worst:e}");
    }
}

#[test]
fn filter_sde_drift_residual() {
    let h = 1e-3;
    for (p, phi) in parameter_sets() {
        let jumps = jump_scenario();
        let (a, am, b2) = (p.alpha(), p.alpha() * p.mu0(), p.rho());
        let mut worst = 0.0f64;
        for (s, t) in grid(phi) {
            let at = |t: f64| FilterState::at(&p, phi, &jumps, t).unwrap();
            let state = at(t);
            let f = state.conditional_mgf(s).unwrap();
            let ft = d4(|u| at(u).conditional_mgf(s).unwrap(), t, h);
            let fs = d4(|v| state.conditional_mgf(v).unwrap(), s, h);
            let lam = state.conditional_mean();
            let terms = [(-a * s + 0.5 * s * s * b2) * fs, s * am * f, -fs, lam * f];
            let rhs: f64 = terms.iter().sum();
            let scale = ft.abs() + terms.iter().map(|x| x.abs()).sum::<f64>();
            worst = worst.max((ft - rhs).abs() / scale);
        }
        assert!(worst < 1e-6, "{p:?}: residual {worst:e}");
    }
}

#[test]
fn mean_matches_finite_difference() {
    let p = reference_params();
    let state = FilterState::at(&p, 4.0, &jump_scenario(), 2.4).unwrap();
    let h = 1e-6;
    let fd = (state.conditional_mgf(h).unwrap() - 1.0) / h;
    let m = state.conditional_mean();
    assert!((fd - m).abs() < 1e-5 * m);
}

#[test]
fn second_moment_matches_finite_difference() {
    let p = reference_params();
    let state = FilterState::at(&p, 4.0, &jump_scenario(), 2.4).unwrap();
    let h = 1e-3;
    let f = |s: f64| state.conditional_mgf(s).unwrap();
    let fd2 =
        (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
    let (_, m2) = state.conditional_moments();
    assert!((fd2 - m2).abs() < 1e-6 * m2, "{fd2} vs {m2}");
}

#[test]
fn survival_is_decreasing_and_starts_at_one() {
    let p = reference_params();
    let state = FilterState::at(&p, 4.0, &jump_scenario(), 2.4).unwrap();
    assert!((state.conditional_survival(1e-12).unwrap() - 1.0).abs() < 1e-10);
    let mut prev = 1.0;
    for i in 1..50 {
        let s = state.conditional_survival(0.1 * i as f64).unwrap();
        assert!(s < prev && s > 0.0);
        prev = s;
    }
}
