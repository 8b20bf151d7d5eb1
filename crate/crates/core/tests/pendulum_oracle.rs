mod common;

use common::elliptic::{angle_difference, pendulum_flow};
use common::initial_conditions;
use qrkick::pcl::{pulse_map, PendulumIntegrator, SymplecticScheme, Trajectory};

fn worst_error(integrator: &PendulumIntegrator, ics: &[(f64, f64, f64)]) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut drift = 0.0f64;
    for &(theta, j, v) in ics {
        let t = Trajectory::new(theta, j);
        let out = pulse_map(t, v, integrator);
        let (theta_ref, j_ref) = pendulum_flow(theta, j, v, 1.0);
        worst = worst
            .max(angle_difference(out.theta, theta_ref).abs())
            .max((out.j - j_ref).abs());
        drift = drift.max((out.pendulum_energy(v) - t.pendulum_energy(v)).abs());
    }
    (worst, drift)
}

#[test]
fn oracle_conserves_energy_and_is_consistent() {
    for (theta, j, v) in initial_conditions(200, 3) {
        let (t1, j1) = pendulum_flow(theta, j, v, 0.7);
        let e0 = j * j / 2.0 - v * theta.cos();
        let e1 = j1 * j1 / 2.0 - v * t1.cos();
        assert!((e1 - e0).abs() < 1e-10 * (1.0 + e0.abs()), "{theta} {j} {v}");
        // dθ/dt = 𝒥 by central difference
        let h = 1e-5;
        let (tp, _) = pendulum_flow(theta, j, v, 0.7 + h);
        let (tm, _) = pendulum_flow(theta, j, v, 0.7 - h);
        assert!((angle_difference(tp, tm) / (2.0 * h) - j1).abs() < 1e-5);
    }
}

#[test]
fn oracle_small_oscillation_limit() {
    let v = 2.0;
    let a = 1e-4;
    let (theta, _) = pendulum_flow(a, 0.0, v, 1.0);
    assert!((theta - a * (v.sqrt()).cos()).abs() < 1e-11);
}

#[test]
fn oracle_composes_over_time() {
    for (theta, j, v) in initial_conditions(100, 5) {
        let (ta, ja) = pendulum_flow(theta, j, v, 1.0);
        let (tb, jb) = pendulum_flow(theta, j, v, 0.4);
        let (tc, jc) = pendulum_flow(tb, jb, v, 0.6);
        assert!(angle_difference(ta, tc).abs() < 1e-9 && (ja - jc).abs() < 1e-9);
    }
}

#[test]
fn default_integrator_matches_closed_form() {
    let ics = initial_conditions(1000, 11);
    let (worst, drift) = worst_error(&PendulumIntegrator::default(), &ics);
    assert!(worst < 1e-8, "max deviation {worst:e}");
    assert!(drift < 1e-8, "energy drift {drift:e}");
}

#[test]
fn accuracy_improves_with_order_and_substeps() {
    let ics = initial_conditions(300, 13);
    for scheme in [
        SymplecticScheme::Leapfrog,
        SymplecticScheme::Yoshida4,
        SymplecticScheme::Yoshida6,
        SymplecticScheme::Yoshida8,
    ] {
        let errors: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&substeps| worst_error(&PendulumIntegrator { scheme, substeps }, &ics).0)
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{scheme:?}: {errors:?}");
    }
    let fast = worst_error(&PendulumIntegrator::thermal(), &ics);
    assert!(fast.0 < 1e-6 && fast.1 < 1e-6, "{fast:?}");
}
