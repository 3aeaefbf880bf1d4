//! Frequency-dependent loss and coupling kernels.
//!
//! Every environment is described by a loss kernel `K_l(ω)` and a coupling
//! kernel `K_c(ω)`. Physical radiative channels satisfy `|K_c|² = 2 Re K_l`.
//! Frequencies and rates may be given in any consistent unit; the command line
//! front end normalizes everything by the bare resonance `ω_a`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{integrate, QuadError, QuadSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("Fano junction must be lossless (r_d^2 + t_d^2 = 1), got {0}")]
    LossyJunction(f64),
    #[error("theta2 is inconsistent with e^(2i theta2) = r_d - i t_d sigma (mismatch {0:e})")]
    PhaseMismatch(f64),
    #[error("background loss breaks |K_c|^2 = 2 Re K_l by construction; check the inner model instead")]
    BackgroundNotAllowed,
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("time step {dt} does not resolve the kernel (need dt <= {limit})")]
    Unresolved { dt: f64, limit: f64 },
    #[error("time step {dt} must divide the round-trip time {round_trip} into an integer number of steps")]
    IncommensurateStep { dt: f64, round_trip: f64 },
    #[error("window of {n_samples} samples is too short for a kernel memory of {needed} samples")]
    WindowTooShort { n_samples: usize, needed: usize },
    #[error("kernel energy at negative time is {fraction:e} (limit 1e-6): inconsistent model parameters")]
    Acausal { fraction: f64 },
    #[error("sum rule did not converge: {0}")]
    NoConvergence(String),
}

/// Parity of the Fano junction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Option<Self> {
        if s == 1.0 {
            Some(Parity::Even)
        } else if s == -1.0 {
            Some(Parity::Odd)
        } else {
            None
        }
    }
}

/// Cavity closed by a partially transmitting Fano mirror with round-trip time `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoMirror {
    kappa: f64,
    r_d: f64,
    t_d: f64,
    sigma: Parity,
    round_trip: f64,
    theta1: f64,
    theta2: f64,
}

const PHASE_TOL: f64 = 1e-12;

impl FanoMirror {
    /// Builds the mirror with the phases implied by `(r_d, t_d, sigma)`.
    pub fn new(kappa: f64, r_d: f64, t_d: f64, sigma: Parity, round_trip: f64) -> Result<Self, KernelError> {
        Self::with_phases(kappa, r_d, t_d, sigma, round_trip, None, None)
    }

    /// Lossless junction with `t_d = sqrt(1 - r_d^2)`.
    pub fn lossless(kappa: f64, r_d: f64, sigma: Parity, round_trip: f64) -> Result<Self, KernelError> {
        let t_d = (1.0 - r_d * r_d).max(0.0).sqrt();
        Self::new(kappa, r_d, t_d, sigma, round_trip)
    }

    /// Builds the mirror with optional explicit phases.
    ///
    /// `theta2` must satisfy `e^{2iθ₂} = r_d − i t_d σ`. When `theta1` is omitted it is
    /// set so that `e^{i(θ₂−θ₁)} = σ`, the only choice compatible with `|K_c|² = 2 Re K_l`.
    pub fn with_phases(
        kappa: f64,
        r_d: f64,
        t_d: f64,
        sigma: Parity,
        round_trip: f64,
        theta1: Option<f64>,
        theta2: Option<f64>,
    ) -> Result<Self, KernelError> {
        check_rate("kappa", kappa)?;
        if !(round_trip.is_finite() && round_trip > 0.0) {
            return Err(KernelError::InvalidParameter {
                name: "T",
                requirement: "positive",
                value: round_trip,
            });
        }
        if !(r_d.is_finite() && t_d.is_finite() && r_d.abs() <= 1.0 && (0.0..=1.0).contains(&t_d)) {
            return Err(KernelError::InvalidParameter {
                name: "r_d/t_d",
                requirement: "in [-1, 1] and [0, 1]",
                value: if r_d.abs() > 1.0 { r_d } else { t_d },
            });
        }
        let norm = r_d * r_d + t_d * t_d;
        if norm > 1.0 + PHASE_TOL || (norm - 1.0).abs() > PHASE_TOL {
            return Err(KernelError::LossyJunction(norm));
        }
        let target = C64::new(r_d, -t_d * sigma.sign());
        let theta2 = match theta2 {
            Some(t2) => {
                let mismatch = (C64::from_polar(1.0, 2.0 * t2) - target).norm();
                if mismatch > 1e-12 {
                    return Err(KernelError::PhaseMismatch(mismatch));
                }
                t2
            }
            None => 0.5 * target.arg(),
        };
        let theta1 = theta1.unwrap_or(match sigma {
            Parity::Even => theta2,
            Parity::Odd => theta2 + PI,
        });
        Ok(Self {
            kappa,
            r_d,
            t_d,
            sigma,
            round_trip,
            theta1,
            theta2,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn r_d(&self) -> f64 {
        self.r_d
    }
    pub fn t_d(&self) -> f64 {
        self.t_d
    }
    pub fn sigma(&self) -> Parity {
        self.sigma
    }
    pub fn round_trip(&self) -> f64 {
        self.round_trip
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    /// Free spectral range `2π/T`.
    pub fn fsr(&self) -> f64 {
        2.0 * PI / self.round_trip
    }

    fn denominator(&self, omega: f64) -> C64 {
        C64::new(self.r_d, 0.0) - C64::from_polar(1.0, -omega * self.round_trip)
    }

    fn loss(&self, omega: f64) -> C64 {
        let e2 = C64::from_polar(1.0, 2.0 * self.theta2);
        2.0 * self.kappa * (C64::new(1.0, 0.0) - e2 / self.denominator(omega))
    }

    fn coupling(&self, omega: f64) -> C64 {
        let rel = C64::from_polar(self.t_d, self.theta2 - self.theta1);
        let bracket = C64::new(1.0, 0.0) + C64::i() * rel / self.denominator(omega);
        (2.0 * self.kappa).sqrt() * C64::from_polar(1.0, self.theta1) * bracket
    }
}

/// Environment seen by the resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum KernelModel {
    Markovian { gamma: f64 },
    FriedrichWintgen { kappa: f64, gamma: f64, omega_d: f64 },
    FanoMirror(FanoMirror),
    WithBackground { inner: Box<KernelModel>, kappa_bg: f64 },
}

fn check_rate(name: &'static str, v: f64) -> Result<(), KernelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter {
            name,
            requirement: "a finite rate >= 0",
            value: v,
        })
    }
}

impl KernelModel {
    pub fn markovian(gamma: f64) -> Result<Self, KernelError> {
        check_rate("gamma", gamma)?;
        Ok(KernelModel::Markovian { gamma })
    }

    pub fn friedrich_wintgen(kappa: f64, gamma: f64, omega_d: f64) -> Result<Self, KernelError> {
        check_rate("kappa", kappa)?;
        check_rate("gamma", gamma)?;
        if gamma == 0.0 {
            return Err(KernelError::InvalidParameter {
                name: "gamma",
                requirement: "positive for the Friedrich-Wintgen model",
                value: gamma,
            });
        }
        if !omega_d.is_finite() {
            return Err(KernelError::InvalidParameter {
                name: "omega_d",
                requirement: "finite",
                value: omega_d,
            });
        }
        Ok(KernelModel::FriedrichWintgen { kappa, gamma, omega_d })
    }

    pub fn fano(mirror: FanoMirror) -> Self {
        KernelModel::FanoMirror(mirror)
    }

    /// Adds a frequency-independent, non-radiative loss channel.
    pub fn with_background(self, kappa_bg: f64) -> Result<Self, KernelError> {
        check_rate("kappa_bg", kappa_bg)?;
        if kappa_bg == 0.0 {
            return Ok(self);
        }
        Ok(match self {
            KernelModel::WithBackground { inner, kappa_bg: k0 } => KernelModel::WithBackground {
                inner,
                kappa_bg: k0 + kappa_bg,
            },
            other => KernelModel::WithBackground {
                inner: Box::new(other),
                kappa_bg,
            },
        })
    }

    /// Re-checks invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            KernelModel::Markovian { gamma } => check_rate("gamma", *gamma),
            KernelModel::FriedrichWintgen { kappa, gamma, omega_d } => {
                Self::friedrich_wintgen(*kappa, *gamma, *omega_d).map(|_| ())
            }
            KernelModel::FanoMirror(f) => FanoMirror::with_phases(
                f.kappa,
                f.r_d,
                f.t_d,
                f.sigma,
                f.round_trip,
                Some(f.theta1),
                Some(f.theta2),
            )
            .map(|_| ()),
            KernelModel::WithBackground { inner, kappa_bg } => {
                check_rate("kappa_bg", *kappa_bg)?;
                inner.validate()
            }
        }
    }

    /// Loss kernel `K_l(ω)`.
    pub fn loss_at(&self, omega: f64) -> C64 {
        match self {
            KernelModel::Markovian { gamma } => C64::new(*gamma, 0.0),
            KernelModel::FriedrichWintgen { kappa, gamma, omega_d } => *kappa * fw_bracket(*gamma, *omega_d, omega),
            KernelModel::FanoMirror(f) => f.loss(omega),
            KernelModel::WithBackground { inner, kappa_bg } => inner.loss_at(omega) + *kappa_bg,
        }
    }

    /// Coupling kernel `K_c(ω)`; background loss does not couple the drive in.
    pub fn coupling_at(&self, omega: f64) -> C64 {
        match self {
            KernelModel::Markovian { gamma } => C64::new((2.0 * gamma).sqrt(), 0.0),
            KernelModel::FriedrichWintgen { kappa, gamma, omega_d } => {
                (2.0 * kappa).sqrt() * fw_bracket(*gamma, *omega_d, omega)
            }
            KernelModel::FanoMirror(f) => f.coupling(omega),
            KernelModel::WithBackground { inner, .. } => inner.coupling_at(omega),
        }
    }

    pub fn sample(&self, omega: f64) -> ComplexKernelSample {
        ComplexKernelSample {
            omega,
            loss: self.loss_at(omega),
            coupling: self.coupling_at(omega),
        }
    }

    pub fn background(&self) -> f64 {
        match self {
            KernelModel::WithBackground { inner, kappa_bg } => kappa_bg + inner.background(),
            _ => 0.0,
        }
    }

    /// The radiative model with any background channel removed.
    pub fn radiative(&self) -> &KernelModel {
        match self {
            KernelModel::WithBackground { inner, .. } => inner.radiative(),
            other => other,
        }
    }

    /// Loss far from every spectral feature (period average for the Fano comb).
    pub fn mean_loss(&self) -> f64 {
        match self {
            KernelModel::Markovian { gamma } => *gamma,
            KernelModel::FriedrichWintgen { kappa, .. } => *kappa,
            KernelModel::FanoMirror(f) => 2.0 * f.kappa,
            KernelModel::WithBackground { inner, kappa_bg } => inner.mean_loss() + kappa_bg,
        }
    }

    /// Weight of the `δ(τ)` part of the time-domain kernels `(K_l, K_c)`.
    pub fn instantaneous(&self) -> (C64, C64) {
        match self {
            KernelModel::Markovian { gamma } => (C64::new(*gamma, 0.0), C64::new((2.0 * gamma).sqrt(), 0.0)),
            KernelModel::FriedrichWintgen { kappa, .. } => (C64::new(*kappa, 0.0), C64::new((2.0 * kappa).sqrt(), 0.0)),
            KernelModel::FanoMirror(f) => (
                C64::new(2.0 * f.kappa, 0.0),
                (2.0 * f.kappa).sqrt() * C64::from_polar(1.0, f.theta1),
            ),
            KernelModel::WithBackground { inner, kappa_bg } => {
                let (l, c) = inner.instantaneous();
                (l + *kappa_bg, c)
            }
        }
    }

    /// Rate used to scale classification thresholds.
    pub fn rate_scale(&self) -> f64 {
        match self {
            KernelModel::Markovian { gamma } => *gamma,
            KernelModel::FriedrichWintgen { kappa, gamma, .. } => kappa + gamma,
            KernelModel::FanoMirror(f) => 2.0 * f.kappa,
            KernelModel::WithBackground { inner, kappa_bg } => inner.rate_scale() + kappa_bg,
        }
    }

    /// Width of the sharpest spectral feature, `None` for flat kernels.
    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            KernelModel::Markovian { .. } => None,
            KernelModel::FriedrichWintgen { gamma, .. } => Some(*gamma),
            KernelModel::FanoMirror(f) => Some(((1.0 - f.r_d.abs()).max(1e-6) / f.round_trip).min(f.fsr())),
            KernelModel::WithBackground { inner, .. } => inner.bandwidth(),
        }
    }

    /// Period of the kernel in frequency, if any.
    pub fn period(&self) -> Option<f64> {
        match self.radiative() {
            KernelModel::FanoMirror(f) => Some(f.fsr()),
            _ => None,
        }
    }

    /// Frequencies in `[lo, hi]` around which the kernel changes quickly.
    pub fn features(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.radiative() {
            KernelModel::Markovian { .. } => {}
            KernelModel::FriedrichWintgen { gamma, omega_d, .. } => {
                for k in -4..=4 {
                    out.push(omega_d + k as f64 * gamma * 0.5);
                }
            }
            KernelModel::FanoMirror(f) => {
                // Eight points per period resolve the comb; beyond ~4000 periods the
                // adaptive quadrature is left to itself.
                let step = f.fsr() / 8.0;
                let count = ((hi - lo) / step).ceil();
                if count < 32_000.0 {
                    let start = (lo / step).floor() as i64;
                    let end = (hi / step).ceil() as i64;
                    out.extend((start..=end).map(|k| k as f64 * step));
                }
            }
            KernelModel::WithBackground { .. } => unreachable!(),
        }
        out.retain(|w| *w > lo && *w < hi);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Time after which the kernel has decayed below `threshold` of its peak.
    pub fn memory_time(&self, threshold: f64) -> f64 {
        match self.radiative() {
            KernelModel::Markovian { .. } => 0.0,
            KernelModel::FriedrichWintgen { gamma, .. } => (1.0 / threshold).ln() / gamma,
            KernelModel::FanoMirror(f) => {
                let r = f.r_d.abs();
                let echoes = if r < 1e-300 {
                    1.0
                } else if r >= 1.0 {
                    f64::INFINITY
                } else {
                    threshold.ln() / r.ln() + 1.0
                };
                (echoes.ceil() + 1.0) * f.round_trip
            }
            KernelModel::WithBackground { .. } => unreachable!(),
        }
    }
}

fn fw_bracket(gamma: f64, omega_d: f64, omega: f64) -> C64 {
    let iw = C64::new(0.0, omega_d - omega);
    iw / (iw + gamma)
}

/// One evaluation of both kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexKernelSample {
    pub omega: f64,
    pub loss: C64,
    pub coupling: C64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("omega_a must be positive, got {0}")]
    ResonanceFrequency(f64),
    #[error("beta must be finite and >= 0, got {0}")]
    Kerr(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Bare resonance, Kerr shift per photon and environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_a: f64,
    pub beta: f64,
    pub kernel: KernelModel,
}

impl SystemParams {
    pub fn new(omega_a: f64, beta: f64, kernel: KernelModel) -> Result<Self, SystemError> {
        let s = Self { omega_a, beta, kernel };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return Err(SystemError::ResonanceFrequency(self.omega_a));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(SystemError::Kerr(self.beta));
        }
        self.kernel.validate()?;
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }
}

/// Worst `|2 Re K_l − |K_c|²|` over the grid.
pub fn kk_residual(model: &KernelModel, grid: &[f64]) -> Result<f64, KernelError> {
    if matches!(model, KernelModel::WithBackground { .. }) {
        return Err(KernelError::BackgroundNotAllowed);
    }
    if grid.is_empty() {
        return Err(KernelError::EmptyGrid);
    }
    Ok(grid
        .iter()
        .map(|&w| (2.0 * model.loss_at(w).re - model.coupling_at(w).norm_sqr()).abs())
        .fold(0.0, f64::max))
}

/// Linear response `ξ(ω)` with `a(ω) = −iξ(ω)F(ω)`; `Im ξ ≥ 0` wherever `Re K_l ≥ 0`.
pub fn response_xi(system: &SystemParams, omega: f64) -> C64 {
    let d = C64::new(0.0, system.omega_a - omega) + system.kernel.loss_at(omega);
    C64::i() / d
}

/// Settings for [`sum_rule_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRuleConfig {
    /// Target accuracy of the normalized integral.
    pub tol: f64,
    /// Minimum number of free spectral ranges in the window for periodic kernels.
    pub min_periods: usize,
    /// Largest half-width tried before giving up.
    pub max_half_width: f64,
}

impl Default for SumRuleConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            min_periods: 1,
            max_half_width: 1e6,
        }
    }
}

/// `∫ Im ξ(ω) dω / π`, which equals 1 when the commutator is preserved.
///
/// The window is symmetric about `ω_a`. Outside it `Im ξ ≈ K̄/ω²`, whose integral is
/// added analytically; the window is widened until that tail is below `tol/10`.
/// Periodic kernels use whole periods so the tail sees the period-averaged loss.
pub fn sum_rule_check(system: &SystemParams, cfg: &SumRuleConfig) -> Result<f64, KernelError> {
    let kernel = &system.kernel;
    let kbar = kernel.mean_loss();
    let scale = kernel.rate_scale().max(kbar).max(f64::MIN_POSITIVE);
    let needed = 2.0 * kbar / (PI * 0.1 * cfg.tol);
    let mut half = match kernel.period() {
        Some(p) => {
            let periods = (cfg.min_periods.max(1) as f64).max((2.0 * needed / p).ceil());
            0.5 * periods * p
        }
        None => needed.max(1e3 * scale),
    };
    if let Some(bw) = kernel.bandwidth() {
        half = half.max(20.0 * bw);
    }
    if half > cfg.max_half_width {
        return Err(KernelError::NoConvergence(format!(
            "window half-width {half:e} exceeds limit {:e}",
            cfg.max_half_width
        )));
    }
    let (lo, hi) = (system.omega_a - half, system.omega_a + half);
    let mut breaks = kernel.features(lo, hi);
    let lw = kernel.loss_at(system.omega_a).re.max(1e-300);
    for k in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        breaks.push(system.omega_a + k * lw);
    }
    breaks.retain(|w| *w > lo && *w < hi);
    let settings = QuadSettings {
        abs_tol: 0.01 * cfg.tol,
        rel_tol: 0.0,
        max_evals: 4_000_000,
    };
    let body = integrate(|w| response_xi(system, w).im, lo, hi, &breaks, &settings)
        .map_err(|e: QuadError| KernelError::NoConvergence(e.to_string()))?;
    let tail = 2.0 * kbar / (PI * half);
    Ok(body.value / PI + tail)
}

/// Time-domain kernels as product-integration weights.
///
/// `loss[k] = ∫ K_l(τ) h(τ − k dt) dτ` where `h` is the unit hat of half-width `dt`,
/// so that `∫₀ᵗ K_l(τ) α(t − τ) dτ ≈ Σ_k loss[k] α(t − k dt)` for piecewise-linear α.
/// The `δ(τ)` part is included in `loss[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeKernel {
    pub dt: f64,
    pub loss: Vec<C64>,
    pub coupling: Vec<C64>,
    /// Fraction of kernel energy found at negative times in the transform window.
    pub acausal_fraction: f64,
}

impl TimeKernel {
    /// Index after which every weight is below `threshold` of the peak of the
    /// continuous (non-`δ`) part, or 1 for a memoryless kernel.
    pub fn memory_len(&self, threshold: f64, instantaneous: (C64, C64)) -> usize {
        let tail = |v: &[C64], d: C64| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(k, w)| if k == 0 { (*w - d).norm() } else { w.norm() })
                .collect()
        };
        let l = tail(&self.loss, instantaneous.0);
        let c = tail(&self.coupling, instantaneous.1);
        let peak = l.iter().chain(c.iter()).cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 1;
        }
        let last = l
            .iter()
            .zip(c.iter())
            .rposition(|(a, b)| a.max(*b) >= threshold * peak)
            .unwrap_or(0);
        last + 1
    }
}

/// Oversampling of the frequency grid for aperiodic kernels.
const OVERSAMPLE: usize = 64;

/// Samples the time-domain kernels on `n_samples` causal steps of `dt`.
pub fn time_kernel(model: &KernelModel, dt: f64, n_samples: usize) -> Result<TimeKernel, KernelError> {
    time_kernel_in_frame(model, dt, n_samples, 0.0)
}

/// Like [`time_kernel`] for the kernels seen in a frame rotating at `omega_frame`,
/// i.e. the transform of `K(omega_frame + ω)`.
pub fn time_kernel_in_frame(
    model: &KernelModel,
    dt: f64,
    n_samples: usize,
    omega_frame: f64,
) -> Result<TimeKernel, KernelError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(KernelError::InvalidParameter {
            name: "dt",
            requirement: "positive",
            value: dt,
        });
    }
    let radiative = model.radiative();
    let mut periodic_steps = None;
    match radiative {
        KernelModel::FriedrichWintgen { gamma, .. } => {
            if dt * gamma > 0.1 {
                return Err(KernelError::Unresolved { dt, limit: 0.1 / gamma });
            }
        }
        KernelModel::FanoMirror(f) => {
            let limit = f.round_trip / 64.0;
            if dt > limit * (1.0 + 1e-12) {
                return Err(KernelError::Unresolved { dt, limit });
            }
            let m = f.round_trip / dt;
            if (m - m.round()).abs() > 1e-9 * m {
                return Err(KernelError::IncommensurateStep {
                    dt,
                    round_trip: f.round_trip,
                });
            }
            periodic_steps = Some(m.round() as usize);
        }
        _ => {}
    }
    let needed = (model.memory_time(1e-8) / dt).ceil() as usize + 1;
    let n_samples = n_samples.max(1);
    if needed > n_samples {
        return Err(KernelError::WindowTooShort { n_samples, needed });
    }
    // Transform window: causal part plus an equally long negative-time guard.
    let mut n = (2 * n_samples).next_power_of_two();
    if let Some(m) = periodic_steps {
        n = n.div_ceil(m) * m;
    }
    let (inst_l, inst_c) = model.instantaneous();
    let dw = 2.0 * PI / (n as f64 * dt);

    let mut gl = vec![C64::new(0.0, 0.0); n];
    let mut gc = vec![C64::new(0.0, 0.0); n];
    match periodic_steps {
        Some(_) => {
            // The sinc² folding sums to dt exactly for a kernel periodic in 2π/(m dt).
            for j in 0..n {
                let w = omega_frame + j as f64 * dw;
                gl[j] = (model.loss_at(w) - inst_l) * dt;
                gc[j] = (model.coupling_at(w) - inst_c) * dt;
            }
        }
        None if radiative_is_flat(radiative) => {}
        None => {
            let half = (OVERSAMPLE * n / 2) as i64;
            for j in -half..half {
                let w = j as f64 * dw;
                let x = 0.5 * w * dt;
                let s = if x == 0.0 { dt } else { dt * (x.sin() / x).powi(2) };
                let m = j.rem_euclid(n as i64) as usize;
                gl[m] += (model.loss_at(omega_frame + w) - inst_l) * s;
                gc[m] += (model.coupling_at(omega_frame + w) - inst_c) * s;
            }
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut gl);
    fft.process(&mut gc);
    let norm = 1.0 / (n as f64 * dt);
    gl.iter_mut().chain(gc.iter_mut()).for_each(|v| *v *= norm);
    gl[0] += inst_l;
    gc[0] += inst_c;

    let energy = |v: &[C64], r: std::ops::Range<usize>| v[r].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let neg = energy(&gl, n / 2..n) + energy(&gc, n / 2..n);
    let total = energy(&gl, 0..n) + energy(&gc, 0..n);
    let acausal_fraction = if total > 0.0 { neg / total } else { 0.0 };
    if acausal_fraction > 1e-6 {
        return Err(KernelError::Acausal {
            fraction: acausal_fraction,
        });
    }
    gl.truncate(n_samples);
    gc.truncate(n_samples);
    Ok(TimeKernel {
        dt,
        loss: gl,
        coupling: gc,
        acausal_fraction,
    })
}

fn radiative_is_flat(model: &KernelModel) -> bool {
    matches!(model, KernelModel::Markovian { .. })
}
