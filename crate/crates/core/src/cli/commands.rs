use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    config_err, num, numerical_err, CliError, Ctx, DiagnoseArgs, KernelScanArgs, MethodArg, NoiseArgs, NoiseMethodArg,
    PhaseArgs, SpectrumArgs, StartArg, SweepArgs, TransientArgs, ValidateArgs,
};
use crate::config::ResolvedModel;
use crate::dynamics::{
    diagnose_pulsing, simulate_split_step, simulate_two_mode, two_mode_steady_state, DynamicsError, IntegratorMeta,
    Method, PulsingDiagnostics, Trajectory, TwoModeState,
};
use crate::kernels::{kk_residual, sum_rule_check, time_kernel, KernelModel, SumRuleConfig, SystemParams};
use crate::noise::{self, variance_adiabatic, variance_exact, LinearizedPoint, NoiseError, QuadConfig};
use crate::plot::{Axis, Heatmap, LinePlot, Palette, Series};
use crate::stability::{classify, default_epsilon, fw_matrix, phase_diagram};
use crate::steadystate::{pump_amplitude, pump_for_n, steady_roots, sweep_input_output, Branch, Drive, StabilityClass};

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub(crate) fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.log10(), hi.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn print_json(v: &impl Serialize) -> Result<(), CliError> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).map_err(config_err)?;
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(())
}

fn need_points(points: usize) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    Ok(())
}

fn dynamics_err(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::BlowUp(_) => numerical_err(e),
        _ => config_err(e),
    }
}

// ---------------------------------------------------------------- kernel-scan

pub(crate) fn write_kernel_scan(ctx: &mut Ctx, kernel: &KernelModel, grid: &[f64], stem: &str) -> Result<(), CliError> {
    let samples: Vec<_> = grid.iter().map(|&w| kernel.sample(w)).collect();
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                num(s.omega),
                num(s.loss.re),
                num(s.loss.im),
                num(s.coupling.re),
                num(s.coupling.im),
            ]
        })
        .collect();
    ctx.csv(
        &format!("{stem}.csv"),
        &[
            "omega[omega_a]",
            "re_Kl[omega_a]",
            "im_Kl[omega_a]",
            "re_Kc[sqrt(omega_a)]",
            "im_Kc[sqrt(omega_a)]",
        ],
        &rows,
    )?;
    ctx.svg(&format!("{stem}.svg"), || {
        LinePlot {
            title: "Loss kernel".into(),
            x_label: "omega / omega_a".into(),
            y_label: "K_l / omega_a".into(),
            series: vec![
                Series::new("Re K_l", samples.iter().map(|s| (s.omega, s.loss.re)).collect()),
                Series::new("Im K_l", samples.iter().map(|s| (s.omega, s.loss.im)).collect()),
            ],
            ..Default::default()
        }
        .to_svg()
    })
}

/// Default window: twenty feature widths around the resonance, or one period.
pub(crate) fn kernel_window(kernel: &KernelModel) -> (f64, f64) {
    let half = match (kernel.period(), kernel.bandwidth()) {
        (Some(p), _) => p,
        (None, Some(bw)) => (20.0 * bw).max(0.05),
        (None, None) => (20.0 * kernel.rate_scale()).max(0.05),
    };
    (1.0 - half, 1.0 + half)
}

pub(crate) fn kernel_scan(ctx: &mut Ctx, m: &ResolvedModel, a: &KernelScanArgs) -> Result<(), CliError> {
    need_points(a.points)?;
    let (dlo, dhi) = kernel_window(&m.system.kernel);
    let lo = a.omega_min.map(|v| m.freq(v)).unwrap_or(dlo);
    let hi = a.omega_max.map(|v| m.freq(v)).unwrap_or(dhi);
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(CliError::Config(format!("empty window {lo}..{hi}")));
    }
    ctx.param("omega_range", [lo, hi]);
    ctx.param("points", a.points);
    write_kernel_scan(ctx, &m.system.kernel, &linspace(lo, hi, a.points), "kernel")
}

// ---------------------------------------------------------------------- sweep

/// Points `(flux, n, class)` of one root branch.
pub(crate) type Curve = Vec<(f64, f64, StabilityClass)>;

pub(crate) fn write_sweep(
    ctx: &mut Ctx,
    system: &SystemParams,
    omega_p: f64,
    fluxes: &[f64],
    stem: &str,
) -> Result<Vec<Curve>, CliError> {
    let mut sweep = sweep_input_output(system, omega_p, fluxes).map_err(config_err)?;
    // Root finding leaves stability open; fill it in here.
    let eps = default_epsilon(system);
    sweep.points.par_iter_mut().for_each(|p| {
        for r in &mut p.roots {
            r.stability = classify(system, omega_p, r.n, eps).class;
        }
    });
    let mut rows = Vec::new();
    // (flux, n, class) per root index, for plotting.
    let mut curves: Vec<Curve> = vec![Vec::new(); 3];
    for p in &sweep.points {
        let mut r = vec![num(p.flux)];
        for k in 0..3 {
            r.push(p.roots.get(k).map(|s| num(s.n)).unwrap_or_default());
        }
        for k in 0..3 {
            r.push(
                p.roots
                    .get(k)
                    .map(|s| s.stability.label().to_string())
                    .unwrap_or_default(),
            );
        }
        r.push(p.branch.label().to_string());
        rows.push(r);
        for (k, s) in p.roots.iter().enumerate().take(3) {
            let slot = match p.branch {
                Branch::Upper => 2,
                _ => k,
            };
            curves[slot].push((p.flux, s.n, s.stability));
        }
    }
    ctx.csv(
        &format!("{stem}.csv"),
        &[
            "flux[photons*omega_a]",
            "n_root1[photons]",
            "n_root2[photons]",
            "n_root3[photons]",
            "class_root1",
            "class_root2",
            "class_root3",
            "branch_id",
        ],
        &rows,
    )?;
    Ok(curves)
}

fn sweep_plot(title: &str, curves: &[(String, Vec<(f64, f64)>)], log: bool) -> String {
    LinePlot {
        title: title.into(),
        x_label: "pump flux |s|^2 (omega_a)".into(),
        y_label: "photon number n".into(),
        x_axis: Axis { log },
        y_axis: Axis { log },
        series: curves.iter().map(|(n, p)| Series::new(n.clone(), p.clone())).collect(),
    }
    .to_svg()
}

/// Splits per-root curves into stable and unstable segments for plotting.
fn curve_series(curves: &[Vec<(f64, f64, StabilityClass)>], prefix: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut stable = Vec::new();
    let mut unstable = Vec::new();
    for c in curves {
        for (f, n, cls) in c {
            let (s, u) = if *cls == StabilityClass::Stable {
                (*n, f64::NAN)
            } else {
                (f64::NAN, *n)
            };
            stable.push((*f, s));
            unstable.push((*f, u));
        }
        stable.push((f64::NAN, f64::NAN));
        unstable.push((f64::NAN, f64::NAN));
    }
    vec![
        (format!("{prefix}stable"), stable),
        (format!("{prefix}unstable"), unstable),
    ]
}

pub(crate) fn sweep(ctx: &mut Ctx, m: &ResolvedModel, a: &SweepArgs) -> Result<(), CliError> {
    need_points(a.points)?;
    let (lo, hi) = (m.freq(a.flux_min), m.freq(a.flux_max));
    if lo.is_nan() || hi.is_nan() || lo >= hi || lo < 0.0 || (a.log && lo <= 0.0) {
        return Err(CliError::Config(format!("bad flux range {lo}..{hi}")));
    }
    let grid = if a.log {
        logspace(lo, hi, a.points)
    } else {
        linspace(lo, hi, a.points)
    };
    let omega_p = m.freq(a.omega_p);
    ctx.param("omega_p", omega_p);
    ctx.param("flux_range", [lo, hi]);
    ctx.param("points", a.points);
    let curves = write_sweep(ctx, &m.system, omega_p, &grid, "sweep")?;
    ctx.svg("sweep.svg", || {
        sweep_plot(
            &format!("Input-output at omega_p = {omega_p}"),
            &curve_series(&curves, ""),
            a.log,
        )
    })
}

// ---------------------------------------------------------------------- noise

#[derive(Debug, Clone, Copy, Serialize)]
pub(crate) struct NoiseRow {
    pub n: f64,
    pub var_x_exact: f64,
    pub var_y_exact: f64,
    pub var_x_adiabatic: f64,
    pub var_y_adiabatic: f64,
    pub class: StabilityClass,
}

impl NoiseRow {
    pub fn fano(&self) -> f64 {
        if self.var_x_exact.is_nan() {
            self.var_x_adiabatic
        } else {
            self.var_x_exact
        }
    }
}

fn noise_value(r: Result<(f64, f64), NoiseError>) -> (f64, f64) {
    match r {
        Ok(v) => v,
        Err(NoiseError::Diverges { .. } | NoiseError::UnstablePoint | NoiseError::MiCriterionViolated(_)) => {
            (f64::INFINITY, f64::INFINITY)
        }
        Err(_) => (f64::NAN, f64::NAN),
    }
}

pub(crate) fn noise_rows(system: &SystemParams, omega_p: f64, ns: &[f64], method: NoiseMethodArg) -> Vec<NoiseRow> {
    let eps = default_epsilon(system);
    let cfg = QuadConfig::default();
    ns.par_iter()
        .map(|&n| {
            let class = classify(system, omega_p, n, eps).class;
            let point = LinearizedPoint::new(system, omega_p, n);
            let exact = if method == NoiseMethodArg::Adiabatic {
                (f64::NAN, f64::NAN)
            } else {
                noise_value(
                    point
                        .clone()
                        .and_then(|p| variance_exact(&p, &cfg))
                        .map(|r| (r.var_x, r.var_y)),
                )
            };
            let adiabatic = if method == NoiseMethodArg::Exact {
                (f64::NAN, f64::NAN)
            } else {
                noise_value(point.and_then(|p| variance_adiabatic(&p)).map(|r| (r.var_x, r.var_y)))
            };
            NoiseRow {
                n,
                var_x_exact: exact.0,
                var_y_exact: exact.1,
                var_x_adiabatic: adiabatic.0,
                var_y_adiabatic: adiabatic.1,
                class,
            }
        })
        .collect()
}

pub(crate) fn write_noise(ctx: &mut Ctx, rows: &[NoiseRow], stem: &str) -> Result<(), CliError> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.n),
                num(r.var_x_exact),
                num(r.var_y_exact),
                num(r.var_x_adiabatic),
                num(r.var_y_adiabatic),
                num(r.fano()),
                r.class.label().to_string(),
            ]
        })
        .collect();
    ctx.csv(
        &format!("{stem}.csv"),
        &[
            "n[photons]",
            "var_x_exact[coherent=1]",
            "var_y_exact[coherent=1]",
            "var_x_adiabatic[coherent=1]",
            "var_y_adiabatic[coherent=1]",
            "fano[1]",
            "class",
        ],
        &table,
    )
}

fn noise_plot(title: &str, sets: &[(String, &[NoiseRow])]) -> String {
    let mut series = Vec::new();
    for (label, rows) in sets {
        let finite = |v: f64| if v.is_finite() { v } else { f64::NAN };
        if rows.iter().any(|r| r.var_x_exact.is_finite()) {
            series.push(Series::new(
                format!("{label} exact"),
                rows.iter().map(|r| (r.n, finite(r.var_x_exact))).collect(),
            ));
        }
        if rows.iter().any(|r| r.var_x_adiabatic.is_finite()) {
            series.push(Series::new(
                format!("{label} adiabatic"),
                rows.iter().map(|r| (r.n, finite(r.var_x_adiabatic))).collect(),
            ));
        }
    }
    LinePlot {
        title: title.into(),
        x_label: "photon number n".into(),
        y_label: "amplitude variance (coherent = 1)".into(),
        x_axis: Axis { log: true },
        y_axis: Axis { log: true },
        series,
    }
    .to_svg()
}

pub(crate) fn noise(ctx: &mut Ctx, m: &ResolvedModel, a: &NoiseArgs) -> Result<(), CliError> {
    let omega_p = m.freq(a.omega_p);
    ctx.param("omega_p", omega_p);
    ctx.param("method", format!("{:?}", a.method).to_lowercase());
    let (ns, single) = match (a.n, a.flux, a.n_min, a.n_max) {
        (Some(n), _, _, _) => (vec![n], true),
        (None, Some(f), _, _) => {
            let drive = Drive::new(omega_p, m.freq(f)).map_err(config_err)?;
            let roots = steady_roots(&m.system, &drive);
            if roots.is_empty() {
                return Err(CliError::Numerical(format!("no steady state at flux {f}")));
            }
            (roots.iter().map(|r| r.n).collect(), false)
        }
        (None, None, Some(lo), Some(hi)) => {
            need_points(a.points)?;
            if !(lo > 0.0 && lo < hi) {
                return Err(CliError::Config(format!("bad photon-number range {lo}..{hi}")));
            }
            (logspace(lo, hi, a.points), false)
        }
        _ => return Err(CliError::Config("give --n, --flux, or --n-min with --n-max".into())),
    };
    ctx.param("n", &ns);
    let rows = noise_rows(&m.system, omega_p, &ns, a.method);
    write_noise(ctx, &rows, "noise")?;
    if single && !rows[0].fano().is_finite() {
        return Err(CliError::Numerical(format!(
            "noise at n = {} is not finite (state is {})",
            rows[0].n,
            rows[0].class.label()
        )));
    }
    if !single {
        ctx.svg("noise.svg", || {
            noise_plot(&format!("Noise at omega_p = {omega_p}"), &[("var_x".into(), &rows)])
        })?;
    }
    Ok(())
}

pub(crate) fn noise_spectrum(ctx: &mut Ctx, m: &ResolvedModel, a: &SpectrumArgs) -> Result<(), CliError> {
    need_points(a.points)?;
    let omega_p = m.freq(a.omega_p);
    let point = LinearizedPoint::new(&m.system, omega_p, a.n).map_err(config_err)?;
    let modes = point.unstable_mode_count();
    if modes > 0 {
        return Err(CliError::Numerical(format!(
            "state at n = {} has {modes} growing modes; the spectrum is not stationary",
            a.n
        )));
    }
    let scale = point.omega().norm() + 2.0 * m.system.kernel.loss_at(omega_p).re.abs();
    let span = a.span.map(|s| m.freq(s)).unwrap_or(4.0 * scale);
    if span.is_nan() || span <= 0.0 {
        return Err(CliError::Config(format!("span must be positive, got {span}")));
    }
    ctx.param("omega_p", omega_p);
    ctx.param("n", a.n);
    ctx.param("span", span);
    let grid = linspace(-span, span, a.points);
    let spec = noise::noise_spectrum(&point, &grid);
    let rows: Vec<Vec<String>> = spec.iter().map(|r| vec![num(r.omega), num(r.sx), num(r.sy)]).collect();
    ctx.csv(
        "noise_spectrum.csv",
        &["omega[omega_a, offset from omega_p]", "Sx[1/omega_a]", "Sy[1/omega_a]"],
        &rows,
    )?;
    ctx.svg("noise_spectrum.svg", || {
        LinePlot {
            title: format!("Noise spectra at omega_p = {omega_p}, n = {}", a.n),
            x_label: "omega - omega_p (omega_a)".into(),
            y_label: "spectral density".into(),
            y_axis: Axis { log: true },
            series: vec![
                Series::new("S_x", spec.iter().map(|r| (r.omega, r.sx)).collect()),
                Series::new("S_y", spec.iter().map(|r| (r.omega, r.sy)).collect()),
            ],
            ..Default::default()
        }
        .to_svg()
    })
}

// -------------------------------------------------------------- phase-diagram

fn class_index(c: StabilityClass) -> f64 {
    match c {
        StabilityClass::Stable => 0.0,
        StabilityClass::SaddleUnstable => 1.0,
        StabilityClass::MIUnstable => 2.0,
        StabilityClass::Unknown => 3.0,
    }
}

pub(crate) fn write_phase(
    ctx: &mut Ctx,
    system: &SystemParams,
    wp: &[f64],
    ns: &[f64],
    stem: &str,
    title: &str,
) -> Result<(), CliError> {
    let pd = phase_diagram(system, wp, ns).map_err(config_err)?;
    let mut rows = Vec::with_capacity(pd.cells.len());
    for (i, w) in wp.iter().enumerate() {
        for (j, n) in ns.iter().enumerate() {
            let c = pd.cell(i, j);
            rows.push(vec![
                num(*w),
                num(*n),
                c.class.label().to_string(),
                num(c.mi_gain),
                num(c.re_lambda_max),
                num(c.pulse_freq_prediction),
            ]);
        }
    }
    ctx.csv(
        &format!("{stem}.csv"),
        &[
            "omega_p[omega_a]",
            "n[photons]",
            "class",
            "mi_gain[omega_a]",
            "re_lambda_max[omega_a]",
            "im_lambda[omega_a]",
        ],
        &rows,
    )?;
    ctx.svg(&format!("{stem}.svg"), || {
        Heatmap {
            title: title.into(),
            x_label: "pump frequency omega_p / omega_a".into(),
            y_label: "photon number n".into(),
            x: wp.to_vec(),
            y: ns.to_vec(),
            y_axis: Axis { log: true },
            values: pd.cells.iter().map(|c| class_index(c.class)).collect(),
            palette: Palette::Categorical(vec![
                ("#ffffff".into(), "stable".into()),
                ("#000000".into(), "bistable (saddle)".into()),
                ("#9a9a9a".into(), "self-pulsing (MI)".into()),
                ("#f4d0f4".into(), "unknown".into()),
            ]),
        }
        .to_svg()
    })
}

pub(crate) fn phase(ctx: &mut Ctx, m: &ResolvedModel, a: &PhaseArgs) -> Result<(), CliError> {
    let (w0, w1) = (m.freq(a.omega_p_range.0), m.freq(a.omega_p_range.1));
    let (n0, n1) = a.n_range;
    if n0 <= 0.0 {
        return Err(CliError::Config(
            "photon-number range must be positive (log grid)".into(),
        ));
    }
    let wp = linspace(w0, w1, a.resolution.0);
    let ns = logspace(n0, n1, a.resolution.1);
    ctx.param("omega_p_range", [w0, w1]);
    ctx.param("n_range", [n0, n1]);
    ctx.param("resolution", [a.resolution.0, a.resolution.1]);
    write_phase(ctx, &m.system, &wp, &ns, "phase_diagram", "Phase diagram")
}

// ------------------------------------------------------------------ transient

#[derive(Debug, Clone, Copy, Serialize)]
pub(crate) struct TransientSpec {
    pub omega_p: f64,
    pub flux: Option<f64>,
    pub target_n: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub split_step: bool,
    pub seed: f64,
    pub from_vacuum: bool,
    pub window_fraction: f64,
    /// Upper bound on CSV rows; the trajectory is thinned evenly to fit.
    pub max_rows: usize,
}

fn run_once(
    system: &SystemParams,
    s: &TransientSpec,
    drive: &Drive,
    n0: Option<f64>,
    seed: f64,
) -> Result<Trajectory, CliError> {
    let traj = if s.split_step {
        let alpha0 = match n0 {
            Some(n) if n > 0.0 => {
                let p = pump_amplitude(system, s.omega_p, n).map_err(config_err)?;
                n.sqrt() * drive.flux.sqrt() / p * (1.0 + seed)
            }
            _ => C64::new(0.0, 0.0),
        };
        simulate_split_step(system, drive, s.t_end, s.dt, alpha0)
    } else {
        let init = match n0 {
            Some(n) => two_mode_steady_state(system, drive, n, seed).map_err(dynamics_err)?,
            None => TwoModeState::VACUUM,
        };
        simulate_two_mode(system, drive, s.t_end, s.dt, init)
    };
    traj.map_err(dynamics_err)
}

fn diagnostics_json(r: &Result<PulsingDiagnostics, DynamicsError>) -> Value {
    match r {
        Ok(d) => serde_json::to_value(d).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Runs one transient and writes `{stem}.csv`, `{stem}_diagnostics.json` and a plot.
/// Returns the diagnostics of the main run.
pub(crate) fn write_transient(
    ctx: &mut Ctx,
    system: &SystemParams,
    s: &TransientSpec,
    stem: &str,
    title: &str,
) -> Result<Value, CliError> {
    let flux = match (s.flux, s.target_n) {
        (_, Some(n)) => pump_for_n(system, s.omega_p, n).map_err(config_err)?,
        (Some(f), None) => f,
        (None, None) => return Err(CliError::Config("give --flux or --target-n".into())),
    };
    let drive = Drive::new(s.omega_p, flux).map_err(config_err)?;
    let n0 = if s.from_vacuum {
        None
    } else {
        s.target_n.or_else(|| steady_roots(system, &drive).last().map(|r| r.n))
    };
    let traj = run_once(system, s, &drive, n0, s.seed)?;
    let thin = traj.n.len().div_ceil(s.max_rows.max(2)).max(1);
    let rows: Vec<Vec<String>> = traj
        .times
        .iter()
        .zip(&traj.alpha)
        .zip(&traj.n)
        .step_by(thin)
        .map(|((t, a), n)| vec![num(*t), num(a.re), num(a.im), num(*n)])
        .collect();
    ctx.csv(
        &format!("{stem}.csv"),
        &[
            "t[1/omega_a]",
            "re_alpha[sqrt(photons)]",
            "im_alpha[sqrt(photons)]",
            "n[photons]",
        ],
        &rows,
    )?;
    let main = diagnose_pulsing(&traj, s.window_fraction);
    let predicted = n0.map(|n| {
        let r = classify(system, s.omega_p, n, default_epsilon(system));
        json!({ "n": n, "class": r.class.label(), "re_lambda_max": r.re_lambda_max, "pulse_freq": r.pulse_freq_prediction })
    });
    // Rerun with a ten times larger seed to show how much the result depends on it.
    let sensitivity = if n0.is_some() && s.seed != 0.0 {
        let other = run_once(system, s, &drive, n0, 10.0 * s.seed)?;
        let d = diagnose_pulsing(&other, s.window_fraction);
        let rel = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) if a != 0.0 => Some((b - a).abs() / a.abs()),
            _ => None,
        };
        let (freq, swing) = match (&main, &d) {
            (Ok(a), Ok(b)) => (
                rel(a.dominant_freq, b.dominant_freq),
                rel(Some(a.swing_fraction), Some(b.swing_fraction)),
            ),
            _ => (None, None),
        };
        json!({
            "seed": 10.0 * s.seed,
            "diagnostics": diagnostics_json(&d),
            "relative_change_dominant_freq": freq,
            "relative_change_swing_fraction": swing,
        })
    } else {
        Value::Null
    };
    let report = json!({
        "flux": flux,
        "omega_p": s.omega_p,
        "initial_n": n0,
        "seed_perturbation": s.seed,
        "integrator": traj.meta,
        "diagnostics": diagnostics_json(&main),
        "predicted": predicted,
        "seed_sensitivity": sensitivity,
    });
    ctx.json(&format!("{stem}_diagnostics.json"), &report)?;
    ctx.svg(&format!("{stem}.svg"), || {
        let step = traj.n.len().div_ceil(4000).max(1);
        LinePlot {
            title: title.into(),
            x_label: "time (1/omega_a)".into(),
            y_label: "photon number n".into(),
            series: vec![Series::new(
                "n(t)",
                traj.times
                    .iter()
                    .zip(&traj.n)
                    .step_by(step)
                    .map(|(t, n)| (*t, *n))
                    .collect(),
            )],
            ..Default::default()
        }
        .to_svg()
    })?;
    Ok(report)
}

pub(crate) fn transient(ctx: &mut Ctx, m: &ResolvedModel, a: &TransientArgs) -> Result<(), CliError> {
    let spec = TransientSpec {
        omega_p: m.freq(a.omega_p),
        flux: a.flux.map(|f| m.freq(f)),
        target_n: a.target_n,
        t_end: m.time(a.t_end),
        dt: m.time(a.dt),
        split_step: a.method == MethodArg::SplitStep,
        seed: a.seed_perturbation,
        from_vacuum: a.start == StartArg::Vacuum,
        window_fraction: a.window_fraction,
        max_rows: usize::MAX,
    };
    ctx.param("transient", spec);
    write_transient(ctx, &m.system, &spec, "trajectory", "Transient").map(|_| ())
}

// ------------------------------------------------------------------- diagnose

fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(config_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name || h.starts_with(&format!("{name}[")))
            .ok_or_else(|| CliError::Config(format!("trajectory CSV lacks a `{name}` column")))
    };
    let (ct, cre, cim, cn) = (col("t")?, col("re_alpha")?, col("im_alpha")?, col("n")?);
    let (mut times, mut alpha, mut n) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(config_err)?;
        let get = |c: usize| -> Result<f64, CliError> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("row {}: bad number in column {c}", line + 2)))
        };
        times.push(get(ct)?);
        alpha.push(C64::new(get(cre)?, get(cim)?));
        n.push(get(cn)?);
    }
    if times.len() < 2 {
        return Err(CliError::Config("trajectory has fewer than two samples".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 || times.windows(2).any(|w| ((w[1] - w[0]) / h - 1.0).abs() > 1e-6) {
        return Err(CliError::Config("trajectory time grid is not uniform".into()));
    }
    let steps = times.len() - 1;
    Ok(Trajectory {
        times,
        alpha,
        n,
        aux: None,
        drive: Drive {
            omega_p: 0.0,
            flux: 0.0,
        },
        meta: IntegratorMeta {
            dt: h,
            method: Method::TwoModeRk4,
            stride: 1,
            steps,
            memory_len: None,
        },
    })
}

pub(crate) fn diagnose(ctx: &mut Ctx, a: &DiagnoseArgs) -> Result<(), CliError> {
    let traj = read_trajectory(&a.input)?;
    ctx.param("input", a.input.display().to_string());
    ctx.param("window_fraction", a.window_fraction);
    let d = diagnose_pulsing(&traj, a.window_fraction).map_err(|e| match e {
        DynamicsError::WindowTooShort(_) => config_err(e),
        other => numerical_err(other),
    })?;
    print_json(&d)?;
    ctx.json("diagnostics.json", &d)
}

// ------------------------------------------------------------------- validate

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    /// `None` when the check does not apply to this model.
    pass: Option<bool>,
    note: String,
}

impl Check {
    fn measured(name: &'static str, value: f64, tolerance: f64, note: String) -> Self {
        Self {
            name,
            value,
            tolerance,
            pass: Some(value.is_finite() && value <= tolerance),
            note,
        }
    }

    fn skipped(name: &'static str, note: &str) -> Self {
        Self {
            name,
            value: f64::NAN,
            tolerance: f64::NAN,
            pass: None,
            note: note.into(),
        }
    }

    fn failed(name: &'static str, tolerance: f64, note: String) -> Self {
        Self {
            name,
            value: f64::NAN,
            tolerance,
            pass: Some(false),
            note,
        }
    }
}

fn causality_samples(kernel: &KernelModel) -> (f64, usize) {
    match kernel {
        KernelModel::FriedrichWintgen { gamma, .. } => {
            let dt = (0.05 / gamma).min(0.5);
            (
                dt,
                (4.0 * kernel.memory_time(1e-8) / dt).ceil().clamp(64.0, 4e6) as usize,
            )
        }
        KernelModel::FanoMirror(f) => {
            let echoes = (kernel.memory_time(1e-8) / f.round_trip()).ceil().clamp(64.0, 4096.0);
            (f.round_trip() / 64.0, 64 * echoes as usize)
        }
        _ => (1.0, 16),
    }
}

pub(crate) fn validate(ctx: &mut Ctx, m: &ResolvedModel, a: &ValidateArgs) -> Result<(), CliError> {
    let system = &m.system;
    let radiative = system.kernel.radiative();
    let mut checks = Vec::new();

    let (lo, hi) = kernel_window(radiative);
    let grid = linspace(lo, hi, 10_000);
    let kk_tol = 1e-10 * radiative.mean_loss();
    checks.push(match kk_residual(radiative, &grid) {
        Ok(v) => Check::measured(
            "kk_residual",
            v,
            kk_tol,
            format!("|2 Re K_l - |K_c|^2| on 1e4 points in [{lo}, {hi}]"),
        ),
        Err(e) => Check::failed("kk_residual", kk_tol, e.to_string()),
    });

    let sum_tol = if matches!(radiative, KernelModel::FanoMirror(_)) {
        1e-2
    } else {
        1e-3
    };
    checks.push(match sum_rule_check(system, &SumRuleConfig::default()) {
        Ok(v) => Check::measured("sum_rule", (v - 1.0).abs(), sum_tol, format!("integral = {v}")),
        Err(e) => Check::failed("sum_rule", sum_tol, e.to_string()),
    });

    let (dt, samples) = causality_samples(radiative);
    checks.push(match time_kernel(radiative, dt, samples) {
        Ok(tk) => Check::measured(
            "causality",
            tk.acausal_fraction,
            1e-6,
            format!("kernel energy at negative time, dt = {dt}, {samples} samples"),
        ),
        Err(e) => Check::failed("causality", 1e-6, e.to_string()),
    });

    if let KernelModel::FriedrichWintgen { kappa, gamma, .. } = radiative {
        let expect = -2.0 * (kappa + system.kernel.background() + gamma);
        let ns = if system.beta > 0.0 {
            vec![0.0, 0.01 / system.beta]
        } else {
            vec![0.0]
        };
        let mut worst: f64 = 0.0;
        for &wp in &a.trace_omega_p {
            for &n in &ns {
                let mtx = fw_matrix(system, m.freq(wp), n).map_err(numerical_err)?;
                let sum: C64 = mtx.eigenvalues().iter().sum();
                worst = worst.max((sum - expect).norm() / expect.abs());
            }
        }
        checks.push(Check::measured(
            "trace_identity",
            worst,
            1e-10,
            format!("relative deviation of the eigenvalue sum from {expect}"),
        ));
    } else {
        checks.push(Check::skipped("trace_identity", "needs a two-mode (F.W.) model"));
    }

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                num(c.value),
                num(c.tolerance),
                match c.pass {
                    Some(true) => "pass".into(),
                    Some(false) => "fail".into(),
                    None => "n/a".into(),
                },
                c.note.clone(),
            ]
        })
        .collect();
    ctx.csv(
        "validate.csv",
        &["check", "value[1]", "tolerance[1]", "result", "note"],
        &rows,
    )?;
    let all_pass = checks.iter().all(|c| c.pass != Some(false));
    let summary = json!({ "pass": all_pass, "checks": checks });
    print_json(&summary)?;
    ctx.json("validate.json", &summary)?;
    if all_pass {
        Ok(())
    } else {
        let failed: Vec<_> = checks
            .iter()
            .filter(|c| c.pass == Some(false))
            .map(|c| c.name)
            .collect();
        Err(CliError::Numerical(format!("validation failed: {}", failed.join(", "))))
    }
}
