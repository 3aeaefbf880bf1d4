//! Linearized quadrature noise about a steady state.
//!
//! Fluctuations at sideband `ω` around the pump obey
//! `η(ω) δa(ω) + iβn δa†(−ω) = K_c(ω_p+ω) δs(ω)` with
//! `η(ω) = i(ω_ap − ω + 2βn) + K_l(ω_p+ω)`. The response determinant is
//! `M(ω) = η(ω)η*(−ω) − (βn)² = Ω²(ω) − ω² + iΓ²(ω)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::SystemParams;
use crate::quad::{integrate, QuadSettings};
use crate::steadystate::{pump_for_n, Drive, SteadyStateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("photon number must be finite and >= 0, got {0}")]
    InvalidPhotonNumber(f64),
    #[error("singular response at sideband {0}: point lies on an instability boundary")]
    SingularResponse(f64),
    #[error("noise diverges: instability boundary ({unstable_modes} growing modes)")]
    Diverges { unstable_modes: usize },
    #[error("unstable point: Delta^2 < (beta n)^2, relaxation frequency is imaginary")]
    UnstablePoint,
    #[error("adiabatic MI criterion violated: 1 + r Delta/Omega = {0}")]
    MiCriterionViolated(f64),
    #[error("zero loss point: Re K_l(omega_p) = 0")]
    ZeroLoss,
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    /// Amplitude quadrature `X = a + a†`.
    X,
    /// Phase quadrature `Y = −i(a − a†)`.
    Y,
}

impl Quadrature {
    pub fn sigma(self) -> f64 {
        match self {
            Quadrature::X => 1.0,
            Quadrature::Y => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMethod {
    ExactIntegral,
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub var_x: f64,
    pub var_y: f64,
    /// `F = (Δn)²/n`, equal to `var_x` for a real steady-state amplitude.
    pub fano: f64,
    pub method: NoiseMethod,
    /// `Γ²` at the relaxation frequency (adiabatic method only).
    pub gamma_sq: Option<f64>,
    /// False when the kernel bandwidth is below ten cavity linewidths.
    pub adiabatic_regime: bool,
}

/// A steady state parameterized by its photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedPoint {
    system: SystemParams,
    omega_p: f64,
    n: f64,
    omega_ap: f64,
    delta: f64,
    omega: C64,
}

impl LinearizedPoint {
    pub fn new(system: &SystemParams, omega_p: f64, n: f64) -> Result<Self, NoiseError> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(NoiseError::InvalidPhotonNumber(n));
        }
        let omega_ap = system.omega_a - omega_p;
        let bn = system.beta * n;
        let delta = omega_ap + 2.0 * bn;
        let omega = C64::new(delta * delta - bn * bn, 0.0).sqrt();
        Ok(Self {
            system: system.clone(),
            omega_p,
            n,
            omega_ap,
            delta,
            omega,
        })
    }

    pub fn system(&self) -> &SystemParams {
        &self.system
    }
    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn omega_ap(&self) -> f64 {
        self.omega_ap
    }
    /// `Δ = ω_ap + 2βn`.
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// `Ω = √(Δ² − (βn)²)`, imaginary inside the conventional unstable band.
    pub fn omega(&self) -> C64 {
        self.omega
    }
    pub fn beta_n(&self) -> f64 {
        self.system.beta * self.n
    }

    /// The drive that holds this point.
    pub fn drive(&self) -> Result<Drive, NoiseError> {
        let flux = pump_for_n(&self.system, self.omega_p, self.n)?;
        Ok(Drive {
            omega_p: self.omega_p,
            flux,
        })
    }

    pub fn eta(&self, w: f64) -> C64 {
        C64::new(0.0, self.delta - w) + self.system.kernel.loss_at(self.omega_p + w)
    }

    pub fn m(&self, w: f64) -> C64 {
        let b = self.beta_n();
        self.eta(w) * self.eta(-w).conj() - b * b
    }

    /// `(κ₊, κ₋) = (Re K_l(ω_p+ω), Re K_l(ω_p−ω))`.
    pub fn kappa_pm(&self, w: f64) -> (f64, f64) {
        let k = &self.system.kernel;
        (k.loss_at(self.omega_p + w).re, k.loss_at(self.omega_p - w).re)
    }

    /// `(δ₊, δ₋) = (Im K_l(ω_p+ω), Im K_l(ω_p−ω))`.
    pub fn delta_pm(&self, w: f64) -> (f64, f64) {
        let k = &self.system.kernel;
        (k.loss_at(self.omega_p + w).im, k.loss_at(self.omega_p - w).im)
    }

    /// `Ω²(ω) = 3(βn)² + (ω_ap+δ₋)(ω_ap+δ₊) + 2βn(2ω_ap+δ₊+δ₋) + κ₊κ₋ + ω(δ₊−δ₋)`.
    pub fn omega_sq(&self, w: f64) -> f64 {
        let b = self.beta_n();
        let (kp, km) = self.kappa_pm(w);
        let (dp, dm) = self.delta_pm(w);
        let wa = self.omega_ap;
        3.0 * b * b + (wa + dm) * (wa + dp) + 2.0 * b * (2.0 * wa + dp + dm) + kp * km + w * (dp - dm)
    }

    /// `Γ²(ω) = κ₋(Δ + δ₊ − ω) − κ₊(Δ + δ₋ + ω)`.
    pub fn gamma_sq(&self, w: f64) -> f64 {
        let (kp, km) = self.kappa_pm(w);
        let (dp, dm) = self.delta_pm(w);
        km * (self.delta + dp - w) - kp * (self.delta + dm + w)
    }

    /// Transfer functions `(p, q)` from the input at `ω_p+ω`.
    pub fn transfer_pq(&self, w: f64) -> Result<(C64, C64), NoiseError> {
        let m = self.m(w);
        if m.norm() == 0.0 || !m.is_finite() {
            return Err(NoiseError::SingularResponse(w));
        }
        let kc = self.system.kernel.coupling_at(self.omega_p + w);
        let p = self.eta(-w).conj() * kc / m;
        let q = C64::new(0.0, self.beta_n()) * kc / m;
        Ok((p, q))
    }

    /// Spectral density of quadrature `σ` per unit angular frequency, including
    /// the background channel: `(1/π) κ₊ |η*(−ω) + iσβn|² / |M|²`.
    pub fn density(&self, w: f64, quadrature: Quadrature) -> f64 {
        let m2 = self.m(w).norm_sqr();
        if m2 == 0.0 {
            return f64::INFINITY;
        }
        let kp = self.system.kernel.loss_at(self.omega_p + w).re;
        let num = (self.eta(-w).conj() + C64::new(0.0, quadrature.sigma() * self.beta_n())).norm_sqr();
        kp * num / (PI * m2)
    }

    fn breakpoints(&self, half: f64) -> Vec<f64> {
        let kernel = &self.system.kernel;
        let mut pts = vec![0.0];
        let re_omega = self.omega.re;
        let width =
            (self.gamma_sq(re_omega).abs() / (2.0 * re_omega.abs().max(1e-300))).max(1e-9 * kernel.rate_scale());
        for s in [-1.0, 1.0] {
            pts.push(s * re_omega);
            for k in [1.0, 3.0, 10.0, 30.0] {
                pts.push(s * re_omega + k * width);
                pts.push(s * re_omega - k * width);
            }
        }
        for f in kernel.features(self.omega_p - half, self.omega_p + half) {
            pts.push(f - self.omega_p);
            pts.push(self.omega_p - f);
        }
        pts.retain(|w| w.abs() < half);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Half-width beyond which the analytic `1/ω²` tail is at most `tail_tol`.
    fn half_width(&self, tail_tol: f64) -> f64 {
        let k = &self.system.kernel;
        let kbar = k.mean_loss();
        let mut w = (10.0 * self.omega.re.abs())
            .max(100.0 * k.rate_scale())
            .max(10.0 * k.bandwidth().unwrap_or(0.0));
        w = w.max(2.0 * kbar / (PI * tail_tol));
        if let Some(p) = k.period() {
            w = (w / p).ceil() * p;
        }
        w
    }

    /// Number of fluctuation modes with positive growth rate, from the winding of
    /// `M` along the real axis (`M` is analytic in the upper half plane).
    pub fn unstable_mode_count(&self) -> usize {
        let k = &self.system.kernel;
        let b = self.beta_n();
        let scale = self.omega_ap.abs() + 3.0 * b + k.rate_scale() + k.bandwidth().unwrap_or(0.0);
        let half = (1e3 * scale).max(self.half_width(1e-4));
        let mut grid = self.breakpoints(half);
        let small = 1e-7 * k.rate_scale().max(1e-300);
        let decades = (half / small).log10().ceil() as i32;
        for j in 0..=(decades * 40) {
            let x = small * 10f64.powf(j as f64 / 40.0);
            if x < half {
                grid.push(x);
                grid.push(-x);
            }
        }
        let span = 3.0 * self.omega.norm() + 10.0 * k.bandwidth().unwrap_or(0.0) + 10.0 * k.rate_scale();
        for j in 0..=2000 {
            let x = -span + 2.0 * span * j as f64 / 2000.0;
            if x.abs() < half {
                grid.push(x);
            }
        }
        grid.push(-half);
        grid.push(half);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut total = 0.0;
        let mut prev = (grid[0], self.m(grid[0]));
        for &x in &grid[1..] {
            let mx = self.m(x);
            total += self.arg_change(prev.0, prev.1, x, mx, 0);
            prev = (x, mx);
        }
        let z = ((total + 2.0 * PI) / (2.0 * PI)).round();
        z.max(0.0) as usize
    }

    fn arg_change(&self, a: f64, ma: C64, b: f64, mb: C64, depth: u32) -> f64 {
        let d = (mb / ma).arg();
        let mid = 0.5 * (a + b);
        if (d.abs() < 0.3 && depth > 0) || depth > 60 || mid <= a || mid >= b {
            return d;
        }
        if d.abs() < 0.3 {
            // One refinement level guards against a fast swing between samples.
            let mm = self.m(mid);
            let d1 = (mm / ma).arg();
            let d2 = (mb / mm).arg();
            if d1.abs() < 0.3 && d2.abs() < 0.3 {
                return d1 + d2;
            }
            return self.arg_change(a, ma, mid, mm, depth + 1) + self.arg_change(mid, mm, b, mb, depth + 1);
        }
        let mm = self.m(mid);
        self.arg_change(a, ma, mid, mm, depth + 1) + self.arg_change(mid, mm, b, mb, depth + 1)
    }
}

/// Accuracy settings for [`variance_exact`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Absolute tolerance on each variance.
    pub abs_tol: f64,
    /// Largest acceptable analytic tail.
    pub tail_tol: f64,
    pub max_evals: usize,
    /// Variances above this are reported as divergent.
    pub divergence_cap: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-6,
            tail_tol: 1e-4,
            max_evals: 2_000_000,
            divergence_cap: 1e6,
        }
    }
}

/// Variance of one quadrature by direct integration of its spectral density.
pub fn quadrature_variance(
    point: &LinearizedPoint,
    quadrature: Quadrature,
    cfg: &QuadConfig,
) -> Result<f64, NoiseError> {
    let modes = point.unstable_mode_count();
    if modes > 0 {
        return Err(NoiseError::Diverges { unstable_modes: modes });
    }
    integrate_density(point, quadrature, cfg)
}

fn integrate_density(point: &LinearizedPoint, quadrature: Quadrature, cfg: &QuadConfig) -> Result<f64, NoiseError> {
    let half = point.half_width(cfg.tail_tol);
    let breaks = point.breakpoints(half);
    let settings = QuadSettings {
        abs_tol: cfg.abs_tol,
        rel_tol: 0.0,
        max_evals: cfg.max_evals,
    };
    let body = integrate(|w| point.density(w, quadrature), -half, half, &breaks, &settings)
        .map_err(|e| NoiseError::Quadrature(e.to_string()))?;
    let tail = 2.0 * point.system.kernel.mean_loss() / (PI * half);
    let v = body.value + tail;
    if !(v.is_finite() && v < cfg.divergence_cap) {
        return Err(NoiseError::Diverges { unstable_modes: 0 });
    }
    Ok(v)
}

fn adiabatic_regime(system: &SystemParams, omega_p: f64) -> bool {
    match system.kernel.bandwidth() {
        None => true,
        Some(bw) => bw >= 10.0 * system.kernel.loss_at(omega_p).re,
    }
}

/// Both quadrature variances from the exact frequency integrals.
pub fn variance_exact(point: &LinearizedPoint, cfg: &QuadConfig) -> Result<NoiseResult, NoiseError> {
    let modes = point.unstable_mode_count();
    if modes > 0 {
        return Err(NoiseError::Diverges { unstable_modes: modes });
    }
    let var_x = integrate_density(point, Quadrature::X, cfg)?;
    let var_y = integrate_density(point, Quadrature::Y, cfg)?;
    Ok(NoiseResult {
        var_x,
        var_y,
        fano: var_x,
        method: NoiseMethod::ExactIntegral,
        gamma_sq: None,
        adiabatic_regime: adiabatic_regime(&point.system, point.omega_p),
    })
}

/// Closed-form variances assuming the kernel varies slowly across each sideband peak.
///
/// `(ΔX)² ≈ (1 − βn/Δ)[(Δ/Ω)² + rΔ/Ω]/(1 + rΔ/Ω)` with `r = (κ₊−κ₋)/(κ₊+κ₋)` and
/// `κ± = Re K_l(ω_p ± Ω)`. The phase quadrature uses the same peak approximation:
/// `(ΔY)² ≈ [κ₊(Δ+βn+Ω)² + κ₋(Δ+βn−Ω)²]/(2ΩΓ²)`.
pub fn variance_adiabatic(point: &LinearizedPoint) -> Result<NoiseResult, NoiseError> {
    let omega = point.omega;
    if omega.im != 0.0 || omega.re <= 0.0 {
        return Err(NoiseError::UnstablePoint);
    }
    let om = omega.re;
    let d = point.delta;
    let b = point.beta_n();
    let (kp, km) = point.kappa_pm(om);
    let sum = kp + km;
    if sum <= 0.0 {
        return Err(NoiseError::ZeroLoss);
    }
    let r = (kp - km) / sum;
    let g = d / om;
    let denom = 1.0 + r * g;
    if denom <= 0.0 {
        return Err(NoiseError::MiCriterionViolated(denom));
    }
    let var_x = (1.0 - b / d) * (g * g + r * g) / denom;
    let gamma_sq = (d * (km - kp) - om * (km + kp)).abs();
    let var_y = (kp * (d + b + om).powi(2) + km * (d + b - om).powi(2)) / (2.0 * om * gamma_sq);
    Ok(NoiseResult {
        var_x,
        var_y,
        fano: var_x,
        method: NoiseMethod::Adiabatic,
        gamma_sq: Some(gamma_sq),
        adiabatic_regime: adiabatic_regime(&point.system, point.omega_p),
    })
}

/// `(dK_l′/dω)/K_l′` at the pump, the `Ω → 0` limit of `r/Ω`.
pub fn sharp_loss_slope(system: &SystemParams, omega_p: f64) -> Result<f64, NoiseError> {
    let k = &system.kernel;
    let k0 = k.loss_at(omega_p).re;
    if k0 <= 0.0 {
        return Err(NoiseError::ZeroLoss);
    }
    let re = |w: f64| k.loss_at(w).re;
    let central = |h: f64| (re(omega_p + h) - re(omega_p - h)) / (2.0 * h);
    let mut h = 0.1 * k.bandwidth().unwrap_or(1.0);
    let mut prev = {
        let (d1, d2) = (central(h), central(0.5 * h));
        (4.0 * d2 - d1) / 3.0
    };
    for _ in 0..60 {
        h *= 0.5;
        let (d1, d2) = (central(h), central(0.5 * h));
        let est = (4.0 * d2 - d1) / 3.0;
        if (est - prev).abs() <= 1e-7 * est.abs().max(1e-300) || est == prev {
            return Ok(est / k0);
        }
        prev = est;
        if h < 1e-9 * omega_p.abs().max(1.0) {
            break;
        }
    }
    Ok(prev / k0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub sx: f64,
    pub sy: f64,
}

/// Tabulates the quadrature spectral densities, normalized so that
/// `∫ sx dω = (ΔX)²`.
pub fn noise_spectrum(point: &LinearizedPoint, grid: &[f64]) -> Vec<SpectrumRow> {
    grid.iter()
        .map(|&w| SpectrumRow {
            omega: w,
            sx: point.density(w, Quadrature::X),
            sy: point.density(w, Quadrature::Y),
        })
        .collect()
}
