//! Mean-field steady states under a monochromatic pump.
//!
//! With `x = βn` the steady-state condition
//! `[(ω_ap + K_l″(ω_p) + βn)² + K_l′(ω_p)²] n = |s₀|² |K_c(ω_p)|²`
//! becomes the well-scaled cubic `x³ + 2c x² + (c² + k²) x − β|s₀|²|K_c|² = 0`
//! with `c = ω_ap + K_l″` and `k = K_l′`.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::SystemParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error("pump frequency {0} is uncoupled: |K_c(omega_p)|^2 = 0")]
    UncoupledPump(f64),
    #[error("photon number must be finite and >= 0, got {0}")]
    NegativePhotonNumber(f64),
    #[error("flux must be finite and >= 0, got {0}")]
    NegativeFlux(f64),
    #[error("linear cavity cannot be bistable (beta = 0)")]
    LinearCavity,
    #[error("flux grid must be ascending")]
    UnsortedGrid,
}

/// Monochromatic pump `s₀ e^{−iω_p t}` with flux `|s₀|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub omega_p: f64,
    pub flux: f64,
}

impl Drive {
    pub fn new(omega_p: f64, flux: f64) -> Result<Self, SteadyStateError> {
        if !(flux.is_finite() && flux >= 0.0) {
            return Err(SteadyStateError::NegativeFlux(flux));
        }
        Ok(Self { omega_p, flux })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    Unknown,
    Stable,
    SaddleUnstable,
    MIUnstable,
}

impl StabilityClass {
    pub fn label(self) -> &'static str {
        match self {
            StabilityClass::Unknown => "unknown",
            StabilityClass::Stable => "stable",
            StabilityClass::SaddleUnstable => "saddle",
            StabilityClass::MIUnstable => "mi",
        }
    }
}

/// One mean-field solution.
///
/// The pump phase is chosen so that `alpha0` is real and positive; `pump` records
/// the corresponding complex amplitude `s₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub n: f64,
    pub alpha0: C64,
    pub omega_ap: f64,
    pub pump: C64,
    pub stability: StabilityClass,
}

/// Pump amplitude that holds the field at real `√n`.
pub fn pump_amplitude(system: &SystemParams, omega_p: f64, n: f64) -> Result<C64, SteadyStateError> {
    let kc = system.kernel.coupling_at(omega_p);
    if kc.norm_sqr() == 0.0 {
        return Err(SteadyStateError::UncoupledPump(omega_p));
    }
    let omega_ap = system.omega_a - omega_p;
    let lhs = C64::new(0.0, omega_ap + system.beta * n) + system.kernel.loss_at(omega_p);
    Ok(lhs * n.sqrt() / kc)
}

fn make_state(system: &SystemParams, omega_p: f64, n: f64) -> SteadyState {
    SteadyState {
        n,
        alpha0: C64::new(n.sqrt(), 0.0),
        omega_ap: system.omega_a - omega_p,
        pump: pump_amplitude(system, omega_p, n).unwrap_or(C64::new(0.0, 0.0)),
        stability: StabilityClass::Unknown,
    }
}

/// Flux `|s₀|²` that sustains photon number `n`.
pub fn pump_for_n(system: &SystemParams, omega_p: f64, n: f64) -> Result<f64, SteadyStateError> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(SteadyStateError::NegativePhotonNumber(n));
    }
    let kc2 = system.kernel.coupling_at(omega_p).norm_sqr();
    if kc2 == 0.0 {
        return Err(SteadyStateError::UncoupledPump(omega_p));
    }
    let kl = system.kernel.loss_at(omega_p);
    let c = system.omega_a - omega_p + kl.im + system.beta * n;
    Ok((c * c + kl.re * kl.re) * n / kc2)
}

struct Cubic {
    c: f64,
    k2: f64,
    rhs: f64,
}

impl Cubic {
    fn new(system: &SystemParams, drive: &Drive) -> Self {
        let kl = system.kernel.loss_at(drive.omega_p);
        let kc2 = system.kernel.coupling_at(drive.omega_p).norm_sqr();
        Self {
            c: system.omega_a - drive.omega_p + kl.im,
            k2: kl.re * kl.re,
            rhs: system.beta * drive.flux * kc2,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        x * ((x + self.c).powi(2) + self.k2) - self.rhs
    }

    fn deriv(&self, x: f64) -> f64 {
        3.0 * x * x + 4.0 * self.c * x + self.c * self.c + self.k2
    }

    /// Nonnegative real roots in `x = βn`, ascending.
    fn roots(&self) -> Vec<f64> {
        let (a2, a1, a0) = (2.0 * self.c, self.c * self.c + self.k2, -self.rhs);
        #[rustfmt::skip]
        let companion = Matrix3::new(
            -a2, -a1, -a0,
            1.0, 0.0, 0.0,
            0.0, 1.0, 0.0,
        );
        let eig = companion.complex_eigenvalues();
        let mag = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut real: Vec<f64> = eig
            .iter()
            .filter(|z| z.im.abs() < 1e-8 * mag.max(f64::MIN_POSITIVE))
            .map(|z| self.polish(z.re))
            .filter(|x| *x > -1e-12 * mag.max(1.0))
            .map(|x| x.max(0.0))
            .collect();
        real.sort_by(f64::total_cmp);
        real
    }

    fn polish(&self, mut x: f64) -> f64 {
        for _ in 0..8 {
            let d = self.deriv(x);
            if d == 0.0 {
                break;
            }
            let step = self.eval(x) / d;
            let next = x - step;
            if !next.is_finite() || (self.eval(next).abs() >= self.eval(x).abs() && step.abs() > 0.0) {
                break;
            }
            x = next;
        }
        x
    }
}

/// All nonnegative steady states for the drive, ascending in `n`.
pub fn steady_roots(system: &SystemParams, drive: &Drive) -> Vec<SteadyState> {
    if drive.flux == 0.0 {
        return vec![make_state(system, drive.omega_p, 0.0)];
    }
    if system.beta == 0.0 {
        let kl = system.kernel.loss_at(drive.omega_p);
        let kc2 = system.kernel.coupling_at(drive.omega_p).norm_sqr();
        let c = system.omega_a - drive.omega_p + kl.im;
        let n = drive.flux * kc2 / (c * c + kl.re * kl.re);
        return vec![make_state(system, drive.omega_p, n)];
    }
    let cubic = Cubic::new(system, drive);
    let mut xs = cubic.roots();
    if xs.is_empty() {
        // Should not happen: the cubic is negative at 0 and grows without bound.
        let mut hi = cubic.rhs.cbrt().max(1.0);
        while cubic.eval(hi) < 0.0 {
            hi *= 2.0;
        }
        xs.push(bisect(|x| cubic.eval(x), 0.0, hi));
    }
    xs.into_iter()
        .map(|x| make_state(system, drive.omega_p, x / system.beta))
        .collect()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistabilityThreshold {
    /// Total detuning toward the Kerr shift, `−(ω_ap + K_l″(ω_p))` for β > 0.
    pub delta: f64,
    /// `√3 K_l′(ω_p)`.
    pub threshold: f64,
    pub bistable: bool,
}

/// Bistability criterion `δ > √3 K_l′(ω_p)` at the pump frequency.
pub fn bistability_threshold(system: &SystemParams, omega_p: f64) -> Result<BistabilityThreshold, SteadyStateError> {
    if system.beta == 0.0 {
        return Err(SteadyStateError::LinearCavity);
    }
    let kl = system.kernel.loss_at(omega_p);
    let delta = -(system.omega_a - omega_p + kl.im);
    let threshold = 3f64.sqrt() * kl.re;
    Ok(BistabilityThreshold {
        delta,
        threshold,
        bistable: delta > threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// No bistability at this pump frequency.
    Single,
    /// Only the lower branch exists at this flux.
    Lower,
    /// Only the upper branch exists at this flux.
    Upper,
    /// Three coexisting roots.
    Triple,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Single => "single",
            Branch::Lower => "lower",
            Branch::Upper => "upper",
            Branch::Triple => "triple",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub flux: f64,
    pub roots: Vec<SteadyState>,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSweep {
    pub omega_p: f64,
    pub points: Vec<SweepPoint>,
    /// Fluxes where the root count changes, ascending.
    pub turning_points: Vec<f64>,
}

fn root_count(system: &SystemParams, omega_p: f64, flux: f64) -> usize {
    steady_roots(system, &Drive { omega_p, flux }).len()
}

/// Input-output curve over an ascending flux grid.
pub fn sweep_input_output(
    system: &SystemParams,
    omega_p: f64,
    flux_grid: &[f64],
) -> Result<BranchSweep, SteadyStateError> {
    if flux_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(SteadyStateError::UnsortedGrid);
    }
    if let Some(f) = flux_grid.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(SteadyStateError::NegativeFlux(*f));
    }
    let roots: Vec<Vec<SteadyState>> = flux_grid
        .par_iter()
        .map(|&flux| steady_roots(system, &Drive { omega_p, flux }))
        .collect();
    let mut turning_points = Vec::new();
    for (i, w) in roots.windows(2).enumerate() {
        if (w[0].len() > 1) != (w[1].len() > 1) {
            let (mut lo, mut hi) = (flux_grid[i], flux_grid[i + 1]);
            let multi_lo = w[0].len() > 1;
            while hi - lo > 1e-9 * hi.abs() {
                let mid = 0.5 * (lo + hi);
                if (root_count(system, omega_p, mid) > 1) == multi_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            turning_points.push(0.5 * (lo + hi));
        }
    }
    let folds = fold_fluxes(system, omega_p);
    let points = flux_grid
        .iter()
        .zip(roots)
        .map(|(&flux, roots)| {
            let branch = match (&folds, roots.len()) {
                (_, 3) => Branch::Triple,
                (None, _) => Branch::Single,
                (Some((f_up, _)), _) if flux <= *f_up => Branch::Lower,
                (Some(_), _) => Branch::Upper,
            };
            SweepPoint { flux, roots, branch }
        })
        .collect();
    Ok(BranchSweep {
        omega_p,
        points,
        turning_points,
    })
}

/// Analytic fold fluxes `(lower, upper)`: the upper branch exists above `lower` and the
/// lower branch below `upper`. `None` when the pump frequency is not bistable.
pub fn fold_fluxes(system: &SystemParams, omega_p: f64) -> Option<(f64, f64)> {
    if system.beta == 0.0 {
        return None;
    }
    let kl = system.kernel.loss_at(omega_p);
    let c = system.omega_a - omega_p + kl.im;
    let disc = c * c - 3.0 * kl.re * kl.re;
    if c >= 0.0 || disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let x_a = (-2.0 * c - s) / 3.0;
    let x_b = (-2.0 * c + s) / 3.0;
    let flux_at = |x: f64| pump_for_n(system, omega_p, x / system.beta).ok();
    Some((flux_at(x_b)?, flux_at(x_a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelModel;

    fn markov(beta: f64) -> SystemParams {
        SystemParams::new(1.0, beta, KernelModel::markovian(0.01).unwrap()).unwrap()
    }

    #[test]
    fn zero_flux_has_empty_cavity() {
        let r = steady_roots(&markov(1e-6), &Drive::new(1.02, 0.0).unwrap());
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].n, 0.0);
    }

    #[test]
    fn linear_lorentzian_peak() {
        let r = steady_roots(&markov(0.0), &Drive::new(1.0, 3.0).unwrap());
        assert!((r[0].n - 2.0 * 3.0 / 0.01).abs() < 1e-9);
        assert!((pump_for_n(&markov(0.0), 1.0, 1.0).unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn dark_pump_rejected() {
        let s = SystemParams::new(1.0, 1e-10, KernelModel::friedrich_wintgen(1e-4, 1e-2, 1.01).unwrap()).unwrap();
        assert_eq!(pump_for_n(&s, 1.01, 1.0), Err(SteadyStateError::UncoupledPump(1.01)));
    }

    #[test]
    fn threshold_examples() {
        let s = markov(1e-6);
        assert!(bistability_threshold(&s, 1.0 + 0.02).unwrap().bistable);
        assert!(!bistability_threshold(&s, 1.0 + 0.01).unwrap().bistable);
        assert_eq!(
            bistability_threshold(&markov(0.0), 1.0),
            Err(SteadyStateError::LinearCavity)
        );
    }

    #[test]
    fn pump_phase_reproduces_real_field() {
        let s = SystemParams::new(1.0, 1e-10, KernelModel::friedrich_wintgen(1e-4, 1e-2, 1.01).unwrap()).unwrap();
        let n = 3e7;
        let s0 = pump_amplitude(&s, 1.012, n).unwrap();
        assert!((s0.norm_sqr() - pump_for_n(&s, 1.012, n).unwrap()).abs() < 1e-9 * s0.norm_sqr());
        let lhs = (C64::new(0.0, 1.0 - 1.012 + 1e-10 * n) + s.kernel.loss_at(1.012)) * n.sqrt();
        assert!((lhs - s0 * s.kernel.coupling_at(1.012)).norm() < 1e-12 * lhs.norm());
    }
}
