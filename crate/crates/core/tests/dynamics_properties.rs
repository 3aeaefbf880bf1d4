use nmkerr::dynamics::{
    diagnose_pulsing, simulate_split_step, simulate_two_mode, IntegratorMeta, Method, Trajectory, TwoModeState,
};
use nmkerr::stability::{classify, default_epsilon};
use nmkerr::steadystate::{pump_for_n, steady_roots, StabilityClass};
use nmkerr::{Drive, FanoMirror, KernelModel, Parity, SystemParams};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn fw(kappa: f64, gamma: f64, omega_d: f64, beta: f64) -> SystemParams {
    SystemParams::new(
        1.0,
        beta,
        KernelModel::friedrich_wintgen(kappa, gamma, omega_d).unwrap(),
    )
    .unwrap()
}

#[test]
fn zero_drive_keeps_vacuum() {
    let s = fw(1e-4, 1e-2, 1.01, 1e-10);
    let d = Drive::new(1.0, 0.0).unwrap();
    let a = simulate_two_mode(&s, &d, 1e3, 0.5, TwoModeState::VACUUM).unwrap();
    let b = simulate_split_step(&s, &d, 1e3, 0.5, C64::new(0.0, 0.0)).unwrap();
    assert!(a.n.iter().chain(&b.n).all(|&n| n == 0.0));
}

#[test]
fn free_decay_never_gains_photons() {
    let s = fw(1e-3, 1e-2, 1.005, 0.0);
    let d = Drive::new(1.0, 0.0).unwrap();
    let init = TwoModeState {
        alpha: C64::new(3.0, 1.0),
        d: C64::new(0.0, 0.0),
    };
    let a = simulate_two_mode(&s, &d, 5e3, 0.5, init).unwrap();
    assert!(a.n.windows(2).all(|w| w[1] <= w[0]), "two-mode n increased");
    assert!(*a.n.last().unwrap() < 0.5 * a.n[0]);

    let start = C64::new(3.0, 1.0);
    let markov = SystemParams::new(1.0, 0.0, KernelModel::markovian(1e-3).unwrap()).unwrap();
    let direct = FanoMirror::lossless(1e-3, 0.0, Parity::Odd, 40.0).unwrap();
    let direct = SystemParams::new(1.0, 0.0, KernelModel::fano(direct)).unwrap();
    for s in [markov, direct] {
        let b = simulate_split_step(&s, &d, 5e3, 0.1, start).unwrap();
        let tol = 1e-12 * b.n[0];
        assert!(b.n.windows(2).all(|w| w[1] <= w[0] + tol), "split-step n increased");
    }

    // A partially reflecting mirror sends some light back one round trip later, so n
    // may tick up at t = T but never beyond its initial value.
    let m = FanoMirror::lossless(1e-3, -0.5, Parity::Odd, 40.0).unwrap();
    let s = SystemParams::new(1.0, 0.0, KernelModel::fano(m)).unwrap();
    let b = simulate_split_step(&s, &d, 5e3, 0.1, start).unwrap();
    assert!(b.n.iter().all(|&n| n <= b.n[0]));
    assert!(*b.n.last().unwrap() < b.n[0]);
}

#[test]
fn linear_cavity_converges_to_fixed_point() {
    let s = fw(1e-4, 1e-2, 1.01, 0.0);
    let d = Drive::new(1.005, 1.0).unwrap();
    let roots = steady_roots(&s, &d);
    assert_eq!(roots.len(), 1);
    let target = roots[0];
    // Slowest relaxation rate from the linearization.
    let rate = -classify(&s, d.omega_p, target.n, default_epsilon(&s)).re_lambda_max;
    let t = simulate_two_mode(&s, &d, 20.0 / rate, 0.5, TwoModeState::VACUUM).unwrap();
    // The root is quoted for its own pump phase; the simulation pump is real.
    let expect = target.alpha0 * (d.flux.sqrt() / target.pump);
    let alpha = *t.alpha.last().unwrap();
    let err = (alpha - expect).norm() / expect.norm();
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn constant_record_is_not_pulsing() {
    let len = 4096;
    let traj = Trajectory {
        times: (0..len).map(|i| i as f64).collect(),
        alpha: vec![C64::new(10.0, 0.0); len],
        n: vec![100.0; len],
        aux: None,
        drive: Drive::new(1.0, 1.0).unwrap(),
        meta: IntegratorMeta {
            dt: 1.0,
            method: Method::TwoModeRk4,
            stride: 1,
            steps: len - 1,
            memory_len: None,
        },
    };
    let p = diagnose_pulsing(&traj, 0.5).unwrap();
    assert!(!p.is_pulsing);
    assert_eq!(p.swing_fraction, 0.0);
}

/// Times where the second difference of `n` jumps, i.e. kinks in the decay.
fn kinks(t: &Trajectory) -> Vec<f64> {
    let d2: Vec<f64> = t.n.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).collect();
    let typical = {
        let mut v = d2.clone();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    (1..d2.len() - 1)
        .filter(|&i| d2[i] > 50.0 * typical && d2[i] >= d2[i - 1] && d2[i] >= d2[i + 1])
        .map(|i| t.times[i + 1])
        .collect()
}

#[test]
fn fano_impulse_response_has_echoes_at_round_trips() {
    let round_trip = 40.0;
    let m = FanoMirror::lossless(2e-3, 0.6, Parity::Odd, round_trip).unwrap();
    let s = SystemParams::new(1.0, 0.0, KernelModel::fano(m)).unwrap();
    let d = Drive::new(1.0, 0.0).unwrap();
    let dt = 0.05;
    let t = simulate_split_step(&s, &d, 4.5 * round_trip, dt, C64::new(1.0, 0.0)).unwrap();
    let found = kinks(&t);
    assert_eq!(found.len(), 4, "{found:?}");
    for (k, tk) in found.iter().enumerate() {
        let expect = (k + 1) as f64 * round_trip;
        assert!((tk - expect).abs() <= 2.0 * dt, "echo {k} at {tk}, expected {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn split_step_matches_two_mode_on_random_stable_points(
        kappa in 5e-4f64..3e-3,
        gamma in 5e-3f64..2e-2,
        omega_d in 0.99f64..1.01,
        omega_p in 0.985f64..1.015,
        log_n in 5.0f64..7.5,
    ) {
        let s = fw(kappa, gamma, omega_d, 1e-10);
        let n = 10f64.powf(log_n);
        let flux = pump_for_n(&s, omega_p, n);
        prop_assume!(flux.is_ok());
        let d = Drive::new(omega_p, flux.unwrap()).unwrap();
        let roots = steady_roots(&s, &d);
        prop_assume!(roots.len() == 1);
        let report = classify(&s, omega_p, roots[0].n, default_epsilon(&s));
        prop_assume!(report.class == StabilityClass::Stable);
        let t_end = 10.0 / -report.re_lambda_max;
        prop_assume!(t_end < 4e4);

        let a = simulate_two_mode(&s, &d, t_end, 0.1, TwoModeState::VACUUM).unwrap();
        let b = simulate_split_step(&s, &d, t_end, 0.1, C64::new(0.0, 0.0)).unwrap();
        let scale = a.n.iter().copied().fold(0.0, f64::max);
        let dev = a.n.iter().zip(&b.n).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale;
        prop_assert!(dev < 1e-3, "relative deviation {dev}");
        let last = *a.n.last().unwrap();
        prop_assert!((last / roots[0].n - 1.0).abs() < 1e-3, "{last} vs {}", roots[0].n);
    }
}
