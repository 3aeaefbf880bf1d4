//! Stability of steady states and phase diagrams over `(ω_p, n)`.

use nalgebra::linalg::Schur;
use nalgebra::{Matrix4, Rotation3, SMatrix};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{KernelModel, SystemParams};
use crate::noise::LinearizedPoint;
use crate::steadystate::StabilityClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("the quadrature fluctuation matrix needs a Friedrich-Wintgen kernel")]
    NotFriedrichWintgen,
    #[error("inside saddle band: Delta^2 < (beta n)^2")]
    InsideSaddleBand,
    #[error("grid must be ascending and nonempty")]
    BadGrid,
}

/// Linearization of the two-mode model in the basis `(δX_a, δY_a, δX_d, δY_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationMatrix(pub Matrix4<f64>);

impl FluctuationMatrix {
    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues sorted by decreasing real part.
    ///
    /// Uses a bounded real Schur iteration after Parlett–Reinsch balancing. The
    /// QR sweep can stall on some of these structured matrices, so a stalled
    /// attempt is retried on a fixed orthogonal similarity transform and finally
    /// replaced by the roots of the characteristic polynomial.
    pub fn eigenvalues(&self) -> [C64; 4] {
        let mut m: SMatrix<f64, 4, 4> = self.0;
        nalgebra::linalg::balancing::balance_parlett_reinsch(&mut m);
        let schur = Schur::try_new(m, f64::EPSILON, SCHUR_MAX_ITER).or_else(|| {
            let q = scrambler();
            Schur::try_new(q * m * q.transpose(), f64::EPSILON, SCHUR_MAX_ITER)
        });
        let mut out = [C64::new(0.0, 0.0); 4];
        match schur {
            Some(sc) => {
                for (o, e) in out.iter_mut().zip(sc.complex_eigenvalues().iter()) {
                    *o = C64::new(e.re, e.im);
                }
            }
            None => out = charpoly_roots(&self.0),
        }
        out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        out
    }
}

const SCHUR_MAX_ITER: usize = 1000;

/// A fixed rotation mixing all four coordinates.
fn scrambler() -> Matrix4<f64> {
    let mut a = Matrix4::identity();
    a.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(Rotation3::from_euler_angles(0.3, 0.7, 1.1).matrix());
    let mut b = Matrix4::identity();
    b.fixed_view_mut::<3, 3>(1, 1)
        .copy_from(Rotation3::from_euler_angles(0.5, 0.2, 0.9).matrix());
    a * b
}

/// Eigenvalues from the characteristic polynomial (Faddeev–LeVerrier) solved by
/// Aberth iteration with a Newton polish.
fn charpoly_roots(m: &Matrix4<f64>) -> [C64; 4] {
    // p(x) = x⁴ + c[3]x³ + c[2]x² + c[1]x + c[0]
    let mut c = [0.0; 4];
    let mut mk = Matrix4::<f64>::identity();
    for k in 1..=4 {
        if k > 1 {
            mk = m * mk + Matrix4::identity() * c[5 - k];
        }
        c[4 - k] = -(m * mk).trace() / k as f64;
    }
    let p = |x: C64| (((x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
    let dp = |x: C64| ((4.0 * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
    let radius = 1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut z: [C64; 4] =
        std::array::from_fn(|k| C64::from_polar(radius, 0.4 + k as f64 * std::f64::consts::FRAC_PI_2));
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..4 {
            let ratio = p(z[i]) / dp(z[i]);
            let repulse: C64 = (0..4).filter(|j| *j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulse);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm());
            }
        }
        if moved <= 1e-15 * radius {
            break;
        }
    }
    for zi in z.iter_mut() {
        let d = dp(*zi);
        if d.norm() > 0.0 {
            let step = p(*zi) / d;
            if step.is_finite() {
                *zi -= step;
            }
        }
    }
    z
}

/// The 4×4 fluctuation matrix of the Friedrich–Wintgen model at photon number `n`.
///
/// A background loss adds `−κ_bg` to the two `a` quadratures.
pub fn fw_matrix(system: &SystemParams, omega_p: f64, n: f64) -> Result<FluctuationMatrix, StabilityError> {
    let (kappa, gamma, omega_d) = match system.kernel.radiative() {
        KernelModel::FriedrichWintgen { kappa, gamma, omega_d } => (*kappa, *gamma, *omega_d),
        _ => return Err(StabilityError::NotFriedrichWintgen),
    };
    let ka = kappa + system.kernel.background();
    let b = system.beta * n;
    let wap = system.omega_a - omega_p;
    let wdp = omega_d - omega_p;
    let c = (kappa * gamma).sqrt();
    #[rustfmt::skip]
    let m = Matrix4::new(
        -ka,            wap + b,  -c,   0.0,
        -wap - 3.0 * b, -ka,      0.0,  -c,
        -c,             0.0,      -gamma, wdp,
        0.0,            -c,       -wdp, -gamma,
    );
    Ok(FluctuationMatrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Eigenvalues sorted by decreasing real part; for non-F.W. kernels the first
    /// entry is the adiabatic estimate of the leading eigenvalue and the rest are zero.
    pub eigenvalues: [C64; 4],
    pub class: StabilityClass,
    /// `max(0, max Re λ)`; positive means growth.
    pub mi_gain: f64,
    pub re_lambda_max: f64,
    /// `|Im λ|` of the leading pair, i.e. `√(Ω² − (Γ/2)²)`.
    pub pulse_freq_prediction: f64,
}

/// Default classification threshold `10⁻⁶ × rate scale`.
pub fn default_epsilon(system: &SystemParams) -> f64 {
    1e-6 * system.kernel.rate_scale()
}

/// Real part of the leading sideband eigenvalue in the adiabatic approximation,
/// `−(κ₊+κ₋)/2 − (Δ/Ω)(κ₊−κ₋)/2`.
pub fn adiabatic_re_lambda(system: &SystemParams, omega_p: f64, n: f64) -> Result<f64, StabilityError> {
    let p = LinearizedPoint::new(system, omega_p, n).map_err(|_| StabilityError::BadGrid)?;
    let om = p.omega();
    if om.im != 0.0 || om.re <= 0.0 {
        return Err(StabilityError::InsideSaddleBand);
    }
    let (kp, km) = p.kappa_pm(om.re);
    Ok(-(kp + km) / 2.0 - (p.delta() / om.re) * (kp - km) / 2.0)
}

fn classify_eigs(eigs: [C64; 4], eps: f64) -> (StabilityClass, C64) {
    let lead = eigs[0];
    let class = if lead.re <= eps {
        StabilityClass::Stable
    } else if eigs.iter().any(|l| l.re > eps && l.im.abs() < eps) {
        StabilityClass::SaddleUnstable
    } else {
        StabilityClass::MIUnstable
    };
    (class, lead)
}

/// Classifies the steady state with photon number `n`.
pub fn classify(system: &SystemParams, omega_p: f64, n: f64, epsilon: f64) -> StabilityReport {
    if let Ok(m) = fw_matrix(system, omega_p, n) {
        let eigs = m.eigenvalues();
        let (class, lead) = classify_eigs(eigs, epsilon);
        let pulse = eigs
            .iter()
            .filter(|l| l.im.abs() >= epsilon)
            .map(|l| l.im.abs())
            .next()
            .unwrap_or(0.0);
        return StabilityReport {
            eigenvalues: eigs,
            class,
            mi_gain: lead.re.max(0.0),
            re_lambda_max: lead.re,
            pulse_freq_prediction: if lead.im.abs() >= epsilon { lead.im.abs() } else { pulse },
        };
    }
    general_classify(system, omega_p, n, epsilon)
}

fn general_classify(system: &SystemParams, omega_p: f64, n: f64, epsilon: f64) -> StabilityReport {
    let zero = C64::new(0.0, 0.0);
    let p = match LinearizedPoint::new(system, omega_p, n) {
        Ok(p) => p,
        Err(_) => {
            return StabilityReport {
                eigenvalues: [zero; 4],
                class: StabilityClass::Unknown,
                mi_gain: 0.0,
                re_lambda_max: f64::NAN,
                pulse_freq_prediction: 0.0,
            }
        }
    };
    let b = p.beta_n();
    let k0 = system.kernel.loss_at(omega_p).re;
    // M(0) = |η(0)|² − (βn)² changes sign exactly where the input-output curve folds.
    let m0 = p.m(0.0).re;
    let om = p.omega();
    let (class, lead) = if m0 < 0.0 {
        let growth = (b * b - p.delta().powi(2)).max(0.0).sqrt() - k0;
        (StabilityClass::SaddleUnstable, C64::new(growth.max(epsilon * 2.0), 0.0))
    } else if om.im != 0.0 || om.re <= 0.0 {
        let re = (b * b - p.delta().powi(2)).max(0.0).sqrt() - k0;
        (StabilityClass::Stable, C64::new(re.min(0.0), 0.0))
    } else {
        let (kp, km) = p.kappa_pm(om.re);
        let re = -(kp + km) / 2.0 - (p.delta() / om.re) * (kp - km) / 2.0;
        let im = (om.re * om.re - re * re).max(0.0).sqrt();
        let class = if re > epsilon {
            StabilityClass::MIUnstable
        } else {
            StabilityClass::Stable
        };
        (class, C64::new(re, im))
    };
    StabilityReport {
        eigenvalues: [lead, lead.conj(), zero, zero],
        class,
        mi_gain: lead.re.max(0.0),
        re_lambda_max: lead.re,
        pulse_freq_prediction: lead.im.abs(),
    }
}

/// Classification over a grid, parameterized by photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub omega_p: Vec<f64>,
    pub n: Vec<f64>,
    /// Row-major: `cells[i * n.len() + j]` is `(omega_p[i], n[j])`.
    pub cells: Vec<StabilityReport>,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &StabilityReport {
        &self.cells[i * self.n.len() + j]
    }
}

pub fn phase_diagram(
    system: &SystemParams,
    omega_p_grid: &[f64],
    n_grid: &[f64],
) -> Result<PhaseDiagram, StabilityError> {
    phase_diagram_with(system, omega_p_grid, n_grid, |s, w, n| {
        classify(s, w, n, default_epsilon(s))
    })
}

/// Phase diagram using a custom per-cell classifier.
pub fn phase_diagram_with<F>(
    system: &SystemParams,
    omega_p_grid: &[f64],
    n_grid: &[f64],
    f: F,
) -> Result<PhaseDiagram, StabilityError>
where
    F: Fn(&SystemParams, f64, f64) -> StabilityReport + Sync,
{
    let ascending = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[1] > w[0]);
    if !ascending(omega_p_grid) || !ascending(n_grid) {
        return Err(StabilityError::BadGrid);
    }
    let nn = n_grid.len();
    let cells = (0..omega_p_grid.len() * nn)
        .into_par_iter()
        .map(|k| f(system, omega_p_grid[k / nn], n_grid[k % nn]))
        .collect();
    Ok(PhaseDiagram {
        omega_p: omega_p_grid.to_vec(),
        n: n_grid.to_vec(),
        cells,
    })
}
