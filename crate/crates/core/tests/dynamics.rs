use nmkerr::dynamics::{
    diagnose_pulsing, simulate_split_step, simulate_two_mode, two_mode_steady_state, DynamicsError, Trajectory,
    TwoModeState,
};
use nmkerr::steadystate::{pump_for_n, steady_roots};
use nmkerr::{Drive, FanoMirror, KernelModel, Parity, SystemParams};
use num_complex::Complex64 as C64;

fn fig2() -> SystemParams {
    SystemParams::new(1.0, 1e-10, KernelModel::friedrich_wintgen(1e-4, 1e-2, 1.01).unwrap()).unwrap()
}

fn drive_for(s: &SystemParams, wp: f64, n: f64) -> Drive {
    Drive::new(wp, pump_for_n(s, wp, n).unwrap()).unwrap()
}

#[test]
fn steady_state_is_a_fixed_point() {
    let s = fig2();
    let d = drive_for(&s, 0.99, 2e8);
    let init = two_mode_steady_state(&s, &d, 2e8, 0.0).unwrap();
    let t = simulate_two_mode(&s, &d, 2000.0, 0.5, init).unwrap();
    let drift = t.n.iter().map(|v| (v / 2e8 - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift}");
}

#[test]
fn vacuum_relaxes_to_unique_root() {
    let s = fig2();
    let d = drive_for(&s, 0.99, 2e8);
    assert_eq!(steady_roots(&s, &d).len(), 1);
    let t = simulate_two_mode(&s, &d, 3e5, 1.0, TwoModeState::VACUUM).unwrap();
    let last = *t.n.last().unwrap();
    assert!((last / 2e8 - 1.0).abs() < 1e-4, "{last}");
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Observed order from runs at `dt`, `dt/2`, `dt/4`, compared on the coarse grid.
fn observed_order(runs: [Trajectory; 3]) -> f64 {
    let dev = |a: &Trajectory, b: &Trajectory| {
        a.alpha
            .iter()
            .zip(b.alpha.iter().step_by(2))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    };
    let [a, b, c] = runs;
    (dev(&a, &b) / dev(&b, &c)).log2()
}

#[test]
fn rk4_is_fourth_order() {
    let s = fig2();
    let d = drive_for(&s, 0.99, 2e8);
    let run = |dt: f64| simulate_two_mode(&s, &d, 3000.0, dt, TwoModeState::VACUUM).unwrap();
    let order = observed_order([run(0.8), run(0.4), run(0.2)]);
    assert!(order > 3.7 && order < 4.3, "order {order}");
}

#[test]
fn split_step_is_second_order() {
    let s = fig2();
    let d = drive_for(&s, 0.99, 2e8);
    let run = |dt: f64| simulate_split_step(&s, &d, 3000.0, dt, C64::new(0.0, 0.0)).unwrap();
    let order = observed_order([run(0.8), run(0.4), run(0.2)]);
    assert!(order > 1.8 && order < 2.2, "order {order}");
}

#[test]
fn split_step_agrees_with_two_mode() {
    let s = fig2();
    let d = drive_for(&s, 0.99, 2e8);
    let a = simulate_two_mode(&s, &d, 1e4, 0.1, TwoModeState::VACUUM).unwrap();
    let b = simulate_split_step(&s, &d, 1e4, 0.1, C64::new(0.0, 0.0)).unwrap();
    assert_eq!(a.n.len(), b.n.len());
    let scale = a.n.iter().copied().fold(0.0, f64::max);
    let dev = max_dev(&a.n, &b.n) / scale;
    assert!(dev < 1e-3, "relative deviation {dev}");
}

#[test]
fn markovian_split_step_reaches_lorentzian_occupation() {
    let k = 1e-3;
    let s = SystemParams::new(1.0, 0.0, KernelModel::markovian(k).unwrap()).unwrap();
    let d = Drive::new(1.0005, 1.0).unwrap();
    let t = simulate_split_step(&s, &d, 2e4, 0.5, C64::new(0.0, 0.0)).unwrap();
    // |√(2κ) s / (i(ω_a − ω_p) + κ)|²
    let expect = 2.0 * k / (k * k + 0.0005f64.powi(2));
    let last = *t.n.last().unwrap();
    assert!((last / expect - 1.0).abs() < 1e-4, "{last} vs {expect}");
}

#[test]
fn fano_split_step_reaches_steady_state() {
    let m = FanoMirror::lossless(1e-3, -0.9, Parity::Odd, 50.0).unwrap();
    let s = SystemParams::new(1.0, 0.0, KernelModel::fano(m)).unwrap();
    let d = Drive::new(1.0003, 1.0).unwrap();
    let n_ss = steady_roots(&s, &d)[0].n;
    let t = simulate_split_step(&s, &d, 4e4, 0.5, C64::new(0.0, 0.0)).unwrap();
    let last = *t.n.last().unwrap();
    assert!((last / n_ss - 1.0).abs() < 1e-3, "{last} vs {n_ss}");
}

#[test]
fn mi_point_pulses_and_stable_point_does_not() {
    let s = fig2();
    let d = drive_for(&s, 1.0, 5e7);
    // Growth rate is about 4e-6, so a 1e-3 seed saturates after ~2e6.
    let init = two_mode_steady_state(&s, &d, 5e7, 1e-3).unwrap();
    let t = simulate_two_mode(&s, &d, 4e6, 2.0, init).unwrap();
    let p = diagnose_pulsing(&t, 0.25).unwrap();
    assert!(p.is_pulsing, "{p:?}");
    assert!(p.swing_fraction > 1.0, "{p:?}");

    let d = drive_for(&s, 0.99, 2e8);
    let init = two_mode_steady_state(&s, &d, 2e8, 1e-3).unwrap();
    let t = simulate_two_mode(&s, &d, 2e5, 0.5, init).unwrap();
    let p = diagnose_pulsing(&t, 0.5).unwrap();
    assert!(!p.is_pulsing, "{p:?}");
}

#[test]
fn short_window_is_reported() {
    let s = fig2();
    let d = drive_for(&s, 1.0, 5e7);
    let init = two_mode_steady_state(&s, &d, 5e7, 1e-2).unwrap();
    let t = simulate_two_mode(&s, &d, 20.0, 0.5, init).unwrap();
    assert!(matches!(
        diagnose_pulsing(&t, 0.5),
        Err(DynamicsError::WindowTooShort(_))
    ));
}
