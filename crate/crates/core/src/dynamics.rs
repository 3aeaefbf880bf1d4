//! Classical (mean-field) dynamics in the frame rotating at the pump frequency.
//!
//! Two integrators are provided: a fixed-step RK4 for the two-mode
//! Friedrich–Wintgen model, and a split-step scheme for the single-mode
//! memory-kernel equation
//! `α̇ = −i(ω_ap + β|α|²)α − ∫K_l(τ)α(t−τ)dτ + ∫K_c(τ)s(t−τ)dτ`
//! that works with any kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{time_kernel_in_frame, KernelError, KernelModel, SystemParams};
use crate::steadystate::{pump_amplitude, steady_roots, Drive, SteadyStateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("time step {dt} too large for the fastest rate {rate}; use dt <= {suggested}")]
    StepTooLarge { dt: f64, rate: f64, suggested: f64 },
    #[error("the two-mode integrator needs a Friedrich-Wintgen kernel")]
    NotFriedrichWintgen,
    #[error("blow-up: reduce dt or flux (non-finite field at t = {0})")]
    BlowUp(f64),
    #[error("invalid duration or step: t_end = {t_end}, dt = {dt}")]
    BadTimes { t_end: f64, dt: f64 },
    #[error("analysis window too short: {0}")]
    WindowTooShort(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
}

/// Largest number of stored samples per run.
pub const MAX_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    TwoModeRk4,
    SplitStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub dt: f64,
    pub method: Method,
    /// Integration steps between stored samples.
    pub stride: usize,
    pub steps: usize,
    /// History length of the split-step memory, in steps.
    pub memory_len: Option<usize>,
}

/// Uniformly sampled field record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub alpha: Vec<C64>,
    pub n: Vec<f64>,
    /// Auxiliary mode amplitude (two-mode runs only).
    pub aux: Option<Vec<C64>>,
    pub drive: Drive,
    pub meta: IntegratorMeta,
}

impl Trajectory {
    pub fn sample_dt(&self) -> f64 {
        self.meta.dt * self.meta.stride as f64
    }
}

/// Initial condition of the two-mode model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeState {
    pub alpha: C64,
    pub d: C64,
}

impl TwoModeState {
    pub const VACUUM: TwoModeState = TwoModeState {
        alpha: C64 { re: 0.0, im: 0.0 },
        d: C64 { re: 0.0, im: 0.0 },
    };
}

struct Fw {
    kappa: f64,
    kappa_bg: f64,
    gamma: f64,
    omega_d: f64,
}

fn fw_params(system: &SystemParams) -> Result<Fw, DynamicsError> {
    match system.kernel.radiative() {
        KernelModel::FriedrichWintgen { kappa, gamma, omega_d } => Ok(Fw {
            kappa: *kappa,
            kappa_bg: system.kernel.background(),
            gamma: *gamma,
            omega_d: *omega_d,
        }),
        _ => Err(DynamicsError::NotFriedrichWintgen),
    }
}

fn check_times(t_end: f64, dt: f64) -> Result<usize, DynamicsError> {
    if !(t_end.is_finite() && dt.is_finite() && t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(DynamicsError::BadTimes { t_end, dt });
    }
    Ok((t_end / dt).round() as usize)
}

fn expected_n(system: &SystemParams, drive: &Drive, alpha0: C64) -> f64 {
    steady_roots(system, drive)
        .last()
        .map(|s| s.n)
        .unwrap_or(0.0)
        .max(alpha0.norm_sqr())
}

fn stride_for(steps: usize) -> usize {
    steps.div_ceil(MAX_SAMPLES - 1).max(1)
}

/// Steady-state field of the two-mode model for a drive with real amplitude `√flux`,
/// optionally perturbed by a relative `seed` on `α`.
pub fn two_mode_steady_state(
    system: &SystemParams,
    drive: &Drive,
    n: f64,
    seed: f64,
) -> Result<TwoModeState, DynamicsError> {
    let fw = fw_params(system)?;
    let s0 = drive.flux.sqrt();
    let p = pump_amplitude(system, drive.omega_p, n)?;
    let alpha = if p.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        n.sqrt() * s0 / p
    };
    let c = (fw.kappa * fw.gamma).sqrt();
    let d = (-c * alpha + (2.0 * fw.gamma).sqrt() * s0) / C64::new(fw.gamma, fw.omega_d - drive.omega_p);
    Ok(TwoModeState {
        alpha: alpha * (1.0 + seed),
        d,
    })
}

/// Integrates the two-mode Friedrich–Wintgen equations with classical RK4.
pub fn simulate_two_mode(
    system: &SystemParams,
    drive: &Drive,
    t_end: f64,
    dt: f64,
    initial: TwoModeState,
) -> Result<Trajectory, DynamicsError> {
    let fw = fw_params(system)?;
    let steps = check_times(t_end, dt)?;
    let wap = system.omega_a - drive.omega_p;
    let wdp = fw.omega_d - drive.omega_p;
    let beta = system.beta;
    let n_exp = expected_n(system, drive, initial.alpha);
    let rate = [fw.gamma, fw.kappa + fw.kappa_bg, wap.abs(), wdp.abs(), beta * n_exp]
        .into_iter()
        .fold(0.0, f64::max);
    if dt * rate > 0.05 {
        return Err(DynamicsError::StepTooLarge {
            dt,
            rate,
            suggested: 0.05 / rate,
        });
    }
    let s0 = drive.flux.sqrt();
    let c = (fw.kappa * fw.gamma).sqrt();
    let fa = (2.0 * fw.kappa).sqrt() * s0;
    let fd = (2.0 * fw.gamma).sqrt() * s0;
    let ka = fw.kappa + fw.kappa_bg;
    let rhs = |a: C64, d: C64| -> (C64, C64) {
        let da = C64::new(-ka, -(wap + beta * a.norm_sqr())) * a - c * d + fa;
        let dd = C64::new(-fw.gamma, -wdp) * d - c * a + fd;
        (da, dd)
    };
    let stride = stride_for(steps);
    let cap = steps / stride + 1;
    let mut times = Vec::with_capacity(cap);
    let mut alpha = Vec::with_capacity(cap);
    let mut aux = Vec::with_capacity(cap);
    let (mut a, mut d) = (initial.alpha, initial.d);
    for k in 0..=steps {
        if k % stride == 0 {
            times.push(k as f64 * dt);
            alpha.push(a);
            aux.push(d);
        }
        if k == steps {
            break;
        }
        let (k1a, k1d) = rhs(a, d);
        let (k2a, k2d) = rhs(a + 0.5 * dt * k1a, d + 0.5 * dt * k1d);
        let (k3a, k3d) = rhs(a + 0.5 * dt * k2a, d + 0.5 * dt * k2d);
        let (k4a, k4d) = rhs(a + dt * k3a, d + dt * k3d);
        a += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        d += dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if !(a.is_finite() && d.is_finite()) {
            return Err(DynamicsError::BlowUp((k + 1) as f64 * dt));
        }
    }
    let n = alpha.iter().map(|z| z.norm_sqr()).collect();
    Ok(Trajectory {
        times,
        alpha,
        n,
        aux: Some(aux),
        drive: *drive,
        meta: IntegratorMeta {
            dt,
            method: Method::TwoModeRk4,
            stride,
            steps,
            memory_len: None,
        },
    })
}

/// History sum `H_t = Σ_{k=1}^{L−1} w_k A_{t−k}` evaluated block by block: taps up to
/// the block length directly, the rest by one FFT convolution per block.
struct History {
    w: Vec<C64>,
    block: usize,
    fft_len: usize,
    far_spectrum: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    far: Vec<C64>,
    far_start: usize,
}

impl History {
    fn new(w: Vec<C64>) -> Self {
        let l = w.len();
        let block = if l <= 96 {
            l.max(1)
        } else {
            let lf = l as f64;
            ((lf * lf.log2()).sqrt() as usize).clamp(32, l)
        };
        let mut planner = FftPlanner::new();
        let fft_len = if block < l {
            (2 * l + block).next_power_of_two()
        } else {
            1
        };
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut far_spectrum = vec![C64::new(0.0, 0.0); fft_len];
        if block < l {
            far_spectrum[block + 1..l].copy_from_slice(&w[block + 1..l]);
            forward.process(&mut far_spectrum);
        }
        Self {
            w,
            block,
            fft_len,
            far_spectrum,
            forward,
            inverse,
            far: Vec::new(),
            far_start: 0,
        }
    }

    /// History sum for target index `t` given `a[..t]`.
    fn at(&mut self, a: &[C64], t: usize) -> C64 {
        let l = self.w.len();
        let near_end = self.block.min(l - 1).min(t);
        let mut h = C64::new(0.0, 0.0);
        for k in 1..=near_end {
            h += self.w[k] * a[t - k];
        }
        if self.block < l && t > self.block {
            if self.far.is_empty() || t >= self.far_start + self.block || t < self.far_start {
                self.refresh(a, t);
            }
            h += self.far[t - self.far_start];
        }
        h
    }

    fn refresh(&mut self, a: &[C64], s: usize) {
        let l = self.w.len();
        let base = s as isize - l as isize + 1;
        let mut u = vec![C64::new(0.0, 0.0); self.fft_len];
        // Only indices <= s - 2 meet nonzero far taps; later entries may be unknown.
        for (i, slot) in u.iter_mut().enumerate().take(l - 1 + self.block) {
            let idx = base + i as isize;
            if idx >= 0 && (idx as usize) + 1 < s {
                *slot = a[idx as usize];
            }
        }
        self.forward.process(&mut u);
        for (x, y) in u.iter_mut().zip(&self.far_spectrum) {
            *x *= y;
        }
        self.inverse.process(&mut u);
        let scale = 1.0 / self.fft_len as f64;
        self.far = (0..self.block).map(|j| u[l - 1 + j] * scale).collect();
        self.far_start = s;
    }
}

/// Integrates the single-mode memory-kernel equation with a split-step scheme.
///
/// Each step rotates the field by the exact Kerr and detuning phase, using the
/// midpoint intensity from one predictor pass, and advances the memory and drive
/// terms with product-integration weights from [`time_kernel_in_frame`] and an
/// implicit trapezoid on the instantaneous tap. The field is zero before `t = 0`
/// and the pump is switched on at `t = 0` with real amplitude `√flux`.
pub fn simulate_split_step(
    system: &SystemParams,
    drive: &Drive,
    t_end: f64,
    dt: f64,
    alpha0: C64,
) -> Result<Trajectory, DynamicsError> {
    let steps = check_times(t_end, dt)?;
    let wap = system.omega_a - drive.omega_p;
    let beta = system.beta;
    let n_exp = expected_n(system, drive, alpha0);
    let rate = beta * n_exp;
    if dt * rate > 0.05 {
        return Err(DynamicsError::StepTooLarge {
            dt,
            rate,
            suggested: 0.05 / rate,
        });
    }
    let kernel = &system.kernel;
    let window = (kernel.memory_time(1e-8) / dt).ceil() as usize + 2;
    let tk = time_kernel_in_frame(kernel, dt, window, drive.omega_p)?;
    let inst = kernel.instantaneous();
    let len = tk.memory_len(1e-8, inst).max(1);
    let wl: Vec<C64> = tk.loss[..len].to_vec();
    let wc = &tk.coupling[..len];
    let s0 = drive.flux.sqrt();
    // Constant pump from t = 0: the drive term is a running sum of coupling taps,
    // with half of the last tap since the hat straddles the switch-on.
    let drive_at = {
        let mut acc = C64::new(0.0, 0.0);
        let mut prefix: Vec<C64> = wc
            .iter()
            .map(|w| {
                let half_open = acc + 0.5 * w;
                acc += *w;
                half_open * s0
            })
            .collect();
        prefix.push(acc * s0);
        // Right limit at the switch-on: only the instantaneous coupling acts.
        prefix[0] = inst.1 * s0;
        move |j: usize| prefix[j.min(len)]
    };
    let w0 = wl[0];
    let mut history = History::new(wl);
    let mut a = Vec::with_capacity(steps + 1);
    a.push(alpha0);
    let mut h_now = C64::new(0.0, 0.0);
    let half = 0.5 * dt;
    let denom = C64::new(1.0, 0.0) + half * w0;
    for j in 0..steps {
        let aj = a[j];
        let f_now = -(w0 * aj + h_now) + drive_at(j);
        let h_next = history.at(&a, j + 1);
        let explicit = -h_next + drive_at(j + 1);
        let mut intensity = aj.norm_sqr();
        let mut next = aj;
        for _ in 0..2 {
            let rot = C64::from_polar(1.0, -(wap + beta * intensity) * dt);
            next = (rot * (aj + half * f_now) + half * explicit) / denom;
            intensity = 0.5 * (aj.norm_sqr() + next.norm_sqr());
        }
        if !next.is_finite() {
            return Err(DynamicsError::BlowUp((j + 1) as f64 * dt));
        }
        a.push(next);
        h_now = h_next;
    }
    let stride = stride_for(steps);
    let times: Vec<f64> = (0..=steps).step_by(stride).map(|k| k as f64 * dt).collect();
    let alpha: Vec<C64> = a.into_iter().step_by(stride).collect();
    let n = alpha.iter().map(|z| z.norm_sqr()).collect();
    Ok(Trajectory {
        times,
        alpha,
        n,
        aux: None,
        drive: *drive,
        meta: IntegratorMeta {
            dt,
            method: Method::SplitStep,
            stride,
            steps,
            memory_len: Some(len),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsingDiagnostics {
    pub is_pulsing: bool,
    /// Angular frequency of the strongest oscillation of `n(t)` in the window.
    pub dominant_freq: Option<f64>,
    pub swing_fraction: f64,
    /// Exponential decay rate of the oscillation envelope (negative when growing).
    pub decay_rate: Option<f64>,
    pub mean_n: f64,
}

/// Inspects the last `window_fraction` of a trajectory for sustained oscillation.
pub fn diagnose_pulsing(traj: &Trajectory, window_fraction: f64) -> Result<PulsingDiagnostics, DynamicsError> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(DynamicsError::WindowTooShort(format!(
            "window fraction {window_fraction} outside (0, 1]"
        )));
    }
    let len = traj.n.len();
    let m = ((len as f64) * window_fraction).floor() as usize;
    if m < 64 {
        return Err(DynamicsError::WindowTooShort(format!("{m} samples (need 64)")));
    }
    let x = &traj.n[len - m..];
    let h = traj.sample_dt();
    let mean = x.iter().sum::<f64>() / m as f64;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), v| (l.min(*v), u.max(*v)));
    let swing = if mean > 0.0 { (hi - lo) / mean } else { 0.0 };
    if swing <= 1e-12 {
        return Ok(PulsingDiagnostics {
            is_pulsing: false,
            dominant_freq: None,
            swing_fraction: swing.max(0.0),
            decay_rate: None,
            mean_n: mean,
        });
    }
    let freq = dominant_frequency(x, mean, h);
    let duration = h * (m - 1) as f64;
    if freq * duration / (2.0 * PI) < 20.0 {
        return Err(DynamicsError::WindowTooShort(format!(
            "window holds {:.1} oscillation periods (need 20)",
            freq * duration / (2.0 * PI)
        )));
    }
    let decay = envelope_decay(x, h);
    let is_pulsing = swing > 1e-3 && decay.is_none_or(|r| r * duration < 0.05);
    Ok(PulsingDiagnostics {
        is_pulsing,
        dominant_freq: Some(freq),
        swing_fraction: swing,
        decay_rate: decay,
        mean_n: mean,
    })
}

fn dominant_frequency(x: &[f64], mean: f64, h: f64) -> f64 {
    let m = x.len();
    let nfft = (4 * m).next_power_of_two();
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); nfft];
    for (i, v) in x.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / (m - 1) as f64).cos();
        buf[i] = C64::new((v - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let power: Vec<f64> = buf[..nfft / 2].iter().map(|z| z.norm_sqr()).collect();
    let k = (1..power.len() - 1)
        .max_by(|a, b| power[*a].total_cmp(&power[*b]))
        .unwrap_or(1);
    let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
    let shift = if (a - 2.0 * b + c).abs() > 0.0 {
        0.5 * (a - c) / (a - 2.0 * b + c)
    } else {
        0.0
    };
    2.0 * PI * (k as f64 + shift.clamp(-0.5, 0.5)) / (nfft as f64 * h)
}

/// Least-squares slope of `ln |peak|` over the local extrema of `x` about its
/// late-time level (mean of the final tenth, which holds at least two periods).
/// Peaks more than six decades below the largest are ignored so a fully relaxed
/// tail sitting at the rounding floor does not flatten the fit.
fn envelope_decay(x: &[f64], h: f64) -> Option<f64> {
    let tail = &x[x.len() - x.len() / 10..];
    let level = tail.iter().sum::<f64>() / tail.len() as f64;
    let y: Vec<f64> = x.iter().map(|v| (v - level).abs()).collect();
    let floor = 1e-6 * y.iter().copied().fold(0.0, f64::max);
    let peaks: Vec<(f64, f64)> = (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > floor)
        .map(|i| (i as f64 * h, y[i].ln()))
        .collect();
    if peaks.len() < 4 {
        return None;
    }
    let k = peaks.len() as f64;
    let (st, sy) = peaks.iter().fold((0.0, 0.0), |(a, b), (t, v)| (a + t, b + v));
    let (mt, my) = (st / k, sy / k);
    let (num, den) = peaks.iter().fold((0.0, 0.0), |(n, d), (t, v)| {
        (n + (t - mt) * (v - my), d + (t - mt).powi(2))
    });
    if den == 0.0 {
        return None;
    }
    Some(-num / den)
}
