//! Built-in figure recipes. Each one runs end-to-end with no further input and
//! writes CSV plus SVG into `<out>/<preset>/`.

use clap::ValueEnum;
use rayon::prelude::*;

use super::commands::{
    linspace, logspace, noise_rows, write_kernel_scan, write_noise, write_phase, write_sweep, write_transient,
    NoiseRow, TransientSpec,
};
use super::{num, CliError, Ctx, NoiseMethodArg};
use crate::config::SPEED_OF_LIGHT;
use crate::kernels::{FanoMirror, KernelModel, Parity, SystemParams};
use crate::noise::{variance_exact, LinearizedPoint, QuadConfig};
use crate::plot::{Axis, Heatmap, LinePlot, Palette, Series};
use crate::stability::{classify, default_epsilon};
use crate::steadystate::{pump_for_n, StabilityClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Loss profile and input-output curves of the two-mode model.
    #[value(name = "fig2c")]
    Fig2c,
    /// Phase diagram of the two-mode model.
    #[value(name = "fig2d")]
    Fig2d,
    /// Relaxation far from, near, and inside the self-pulsing band.
    #[value(name = "fig2e-g", alias = "fig2e_g", alias = "fig2efg")]
    Fig2eg,
    /// Amplitude and phase variance versus photon number.
    #[value(name = "fig3a")]
    Fig3a,
    /// Amplitude-variance map over pump frequency and photon number.
    #[value(name = "fig3b")]
    Fig3b,
    /// Exact versus adiabatic noise, eigenvalues and MI gain.
    #[value(name = "si_fig1", alias = "si-fig1")]
    SiFig1,
    /// Near-Fock state with the two-mode model.
    #[value(name = "si_fig2", alias = "si-fig2")]
    SiFig2,
    /// Near-Fock search with the Fano mirror.
    #[value(name = "si_fig3", alias = "si-fig3")]
    SiFig3,
    /// Phase diagrams for kappa/gamma = 0.1, 1, 10.
    #[value(name = "si_fig4", alias = "si-fig4")]
    SiFig4,
    /// Fano mirror with a symmetric loss profile.
    #[value(name = "fig4b")]
    Fig4b,
    /// Fano mirror with an asymmetric loss profile.
    #[value(name = "fig4c")]
    Fig4c,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2c => "fig2c",
            Preset::Fig2d => "fig2d",
            Preset::Fig2eg => "fig2e-g",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::SiFig1 => "si_fig1",
            Preset::SiFig2 => "si_fig2",
            Preset::SiFig3 => "si_fig3",
            Preset::SiFig4 => "si_fig4",
            Preset::Fig4b => "fig4b",
            Preset::Fig4c => "fig4c",
        }
    }
}

fn fw(kappa: f64, gamma: f64, omega_d: f64, beta: f64) -> SystemParams {
    SystemParams::new(
        1.0,
        beta,
        KernelModel::friedrich_wintgen(kappa, gamma, omega_d).expect("valid preset"),
    )
    .expect("valid preset")
}

/// kappa = 1e-4, gamma = 1e-2, omega_d = omega_a + gamma, beta = 1e-10.
fn fig2_system() -> SystemParams {
    fw(1e-4, 1e-2, 1.01, 1e-10)
}

/// Round trip `2L/c` of a 5 um cavity at omega_a = 1.03e15 rad/s.
fn fano_round_trip() -> f64 {
    2.0 * 5e-6 / SPEED_OF_LIGHT * 1.03e15
}

fn fano_system(r_d: f64, sigma: Parity) -> SystemParams {
    let mirror = FanoMirror::lossless(1e-4, r_d, sigma, fano_round_trip()).expect("valid preset");
    SystemParams::new(1.0, 1e-4, KernelModel::fano(mirror)).expect("valid preset")
}

pub(crate) fn run(ctx: &mut Ctx, preset: Preset) -> Result<(), CliError> {
    match preset {
        Preset::Fig2c => fig2c(ctx),
        Preset::Fig2d => {
            let s = fig2_system();
            ctx.param("system", &s);
            write_phase(
                ctx,
                &s,
                &linspace(0.97, 1.05, 200),
                &logspace(1e6, 1e9, 200),
                "phase_diagram",
                "Two-mode model: bistable (black) and self-pulsing (grey)",
            )
        }
        Preset::Fig2eg => fig2eg(ctx),
        Preset::Fig3a => fig3a(ctx),
        Preset::Fig3b => fig3b(ctx),
        Preset::SiFig1 => si_fig1(ctx),
        Preset::SiFig2 => near_fock(ctx, &fw(1e-4, 1e-2, 1.004, 1e-4), 1.0042),
        // Best stable point of a search over r_d, parity and pump at the 5 um round trip.
        Preset::SiFig3 => near_fock(ctx, &fano_system(-0.9796, Parity::Odd), 1.00685),
        Preset::SiFig4 => si_fig4(ctx),
        Preset::Fig4b => fano_figure(ctx, 0.0, Parity::Odd),
        Preset::Fig4c => fano_figure(ctx, 0.7, Parity::Odd),
    }
}

fn flux_grid(s: &SystemParams, pumps: &[f64], n_lo: f64, n_hi: f64, points: usize) -> Vec<f64> {
    let fluxes = pumps
        .iter()
        .flat_map(|&w| [pump_for_n(s, w, n_lo), pump_for_n(s, w, n_hi)])
        .filter_map(Result::ok);
    let (lo, hi) = fluxes.fold((f64::INFINITY, 0.0f64), |(a, b), f| (a.min(f), b.max(f)));
    logspace(lo, hi, points)
}

fn fig2c(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = fig2_system();
    ctx.param("system", &s);
    write_kernel_scan(ctx, &s.kernel, &linspace(0.95, 1.07, 2001), "loss_profile")?;
    let pumps = [0.99, 1.0, 1.005, 1.015, 1.02];
    ctx.param("omega_p", pumps);
    let grid = flux_grid(&s, &pumps, 1e5, 2e9, 600);
    let mut series = Vec::new();
    for wp in pumps {
        let curves = write_sweep(ctx, &s, wp, &grid, &format!("input_output_wp{wp}"))?;
        let mut pts = Vec::new();
        for c in &curves {
            pts.extend(
                c.iter()
                    .map(|(f, n, cls)| (*f, if *cls == StabilityClass::Stable { *n } else { f64::NAN })),
            );
            pts.push((f64::NAN, f64::NAN));
        }
        series.push(Series::new(format!("omega_p = {wp}"), pts));
    }
    ctx.svg("input_output.svg", || {
        LinePlot {
            title: "Stable steady states".into(),
            x_label: "pump flux |s|^2 (omega_a)".into(),
            y_label: "photon number n".into(),
            x_axis: Axis { log: true },
            y_axis: Axis { log: true },
            series,
        }
        .to_svg()
    })
}

fn fig2eg(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = fig2_system();
    ctx.param("system", &s);
    // omega_p = omega_a: stable far from the MI band, stable just above it, and inside it.
    let runs = [
        ("fig2e_far", 3e8, 4e5, 1.0, 1e-2, 0.5),
        ("fig2f_near", 8e7, 4e5, 1.0, 1e-2, 0.5),
        ("fig2g_mi", 5e7, 8e6, 2.0, 1e-6, 0.25),
    ];
    let mut summary = serde_json::Map::new();
    for (stem, n, t_end, dt, seed, window) in runs {
        let spec = TransientSpec {
            omega_p: 1.0,
            flux: None,
            target_n: Some(n),
            t_end,
            dt,
            split_step: false,
            seed,
            from_vacuum: false,
            window_fraction: window,
            max_rows: 20_000,
        };
        ctx.param(stem, spec);
        let report = write_transient(ctx, &s, &spec, stem, &format!("Transient at omega_p = 1, n = {n:e}"))?;
        summary.insert(stem.to_string(), report["diagnostics"].clone());
    }
    ctx.json("summary.json", &summary)
}

fn fig3a(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = fig2_system();
    ctx.param("system", &s);
    // 1.013 minimizes the amplitude variance over a scan near omega_d; 1.02 = omega_d + gamma.
    let pumps = [1.013, 1.02];
    ctx.param("omega_p", pumps);
    let ns = logspace(1e6, 1e9, 200);
    let mut sets = Vec::new();
    for wp in pumps {
        let rows = noise_rows(&s, wp, &ns, NoiseMethodArg::Both);
        write_noise(ctx, &rows, &format!("noise_wp{wp}"))?;
        sets.push((wp, rows));
    }
    ctx.svg("noise.svg", || {
        let mut series = Vec::new();
        for (wp, rows) in &sets {
            let fin = |v: f64| if v.is_finite() { v } else { f64::NAN };
            series.push(Series::new(
                format!("var X, {wp}"),
                rows.iter().map(|r| (r.n, fin(r.var_x_exact))).collect(),
            ));
            series.push(Series::new(
                format!("var Y, {wp}"),
                rows.iter().map(|r| (r.n, fin(r.var_y_exact))).collect(),
            ));
        }
        LinePlot {
            title: "Quadrature variances (coherent = 1)".into(),
            x_label: "photon number n".into(),
            y_label: "variance".into(),
            x_axis: Axis { log: true },
            y_axis: Axis { log: true },
            series,
        }
        .to_svg()
    })
}

fn fig3b(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = fig2_system();
    ctx.param("system", &s);
    let wp = linspace(0.99, 1.03, 100);
    let ns = logspace(1e6, 1e9, 100);
    let cfg = QuadConfig::default();
    let eps = default_epsilon(&s);
    let cells: Vec<(f64, StabilityClass)> = (0..wp.len() * ns.len())
        .into_par_iter()
        .map(|k| {
            let (w, n) = (wp[k / ns.len()], ns[k % ns.len()]);
            let class = classify(&s, w, n, eps).class;
            let v = LinearizedPoint::new(&s, w, n)
                .and_then(|p| variance_exact(&p, &cfg))
                .map(|r| r.var_x)
                .unwrap_or(f64::INFINITY);
            (v, class)
        })
        .collect();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .enumerate()
        .map(|(k, (v, c))| {
            vec![
                num(wp[k / ns.len()]),
                num(ns[k % ns.len()]),
                num(*v),
                c.label().to_string(),
            ]
        })
        .collect();
    ctx.csv(
        "var_x_map.csv",
        &["omega_p[omega_a]", "n[photons]", "var_x_exact[coherent=1]", "class"],
        &rows,
    )?;
    ctx.svg("var_x_map.svg", || {
        Heatmap {
            title: "log10 amplitude variance (white: diverges)".into(),
            x_label: "pump frequency omega_p / omega_a".into(),
            y_label: "photon number n".into(),
            x: wp.clone(),
            y: ns.clone(),
            y_axis: Axis { log: true },
            // Invert so that squeezing shows dark; divergent cells stay white.
            values: cells
                .iter()
                .map(|(v, _)| {
                    if v.is_finite() {
                        -v.log10().clamp(-2.0, 2.0)
                    } else {
                        f64::NAN
                    }
                })
                .collect(),
            palette: Palette::Continuous,
        }
        .to_svg()
    })
}

fn si_fig1(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = fig2_system();
    ctx.param("system", &s);
    let pumps = [0.99, 1.005, 1.015, 1.02];
    ctx.param("omega_p", pumps);
    let ns = logspace(1e6, 1e9, 150);
    let mut sets: Vec<(f64, Vec<NoiseRow>)> = Vec::new();
    for wp in pumps {
        let rows = noise_rows(&s, wp, &ns, NoiseMethodArg::Both);
        write_noise(ctx, &rows, &format!("noise_wp{wp}"))?;
        sets.push((wp, rows));
    }
    ctx.svg("noise.svg", || {
        let mut series = Vec::new();
        for (wp, rows) in &sets {
            let fin = |v: f64| if v.is_finite() { v } else { f64::NAN };
            series.push(Series::new(
                format!("exact {wp}"),
                rows.iter().map(|r| (r.n, fin(r.var_x_exact))).collect(),
            ));
            series.push(Series::new(
                format!("adiab. {wp}"),
                rows.iter().map(|r| (r.n, fin(r.var_x_adiabatic))).collect(),
            ));
        }
        LinePlot {
            title: "Fano factor: exact and adiabatic".into(),
            x_label: "photon number n".into(),
            y_label: "F".into(),
            x_axis: Axis { log: true },
            y_axis: Axis { log: true },
            series,
        }
        .to_svg()
    })?;

    // Eigenvalues versus photon number at one pump frequency.
    let eps = default_epsilon(&s);
    let wp = 1.005;
    let eig_ns = logspace(1e6, 1e9, 400);
    let reports: Vec<_> = eig_ns.iter().map(|&n| classify(&s, wp, n, eps)).collect();
    let mut rows = Vec::new();
    for (n, r) in eig_ns.iter().zip(&reports) {
        let mut row = vec![num(*n)];
        for l in r.eigenvalues {
            row.push(num(l.re));
            row.push(num(l.im));
        }
        row.push(r.class.label().into());
        rows.push(row);
    }
    let header = [
        "n[photons]",
        "re_l1[omega_a]",
        "im_l1[omega_a]",
        "re_l2[omega_a]",
        "im_l2[omega_a]",
        "re_l3[omega_a]",
        "im_l3[omega_a]",
        "re_l4[omega_a]",
        "im_l4[omega_a]",
        "class",
    ];
    ctx.csv("eigenvalues_wp1.005.csv", &header, &rows)?;
    ctx.svg("eigenvalues_wp1.005.svg", || {
        LinePlot {
            title: "Leading eigenvalue at omega_p = 1.005".into(),
            x_label: "photon number n".into(),
            y_label: "Re lambda (omega_a)".into(),
            x_axis: Axis { log: true },
            series: vec![Series::new(
                "max Re lambda",
                eig_ns
                    .iter()
                    .zip(&reports)
                    .map(|(n, r)| (*n, r.re_lambda_max))
                    .collect(),
            )],
            ..Default::default()
        }
        .to_svg()
    })?;

    // Largest MI gain over photon number, per pump frequency.
    let wps = linspace(0.97, 1.05, 321);
    let gain_ns = logspace(1e6, 1e9, 300);
    let gains: Vec<f64> = wps
        .par_iter()
        .map(|&w| {
            gain_ns
                .iter()
                .map(|&n| classify(&s, w, n, eps))
                .filter(|r| r.class == StabilityClass::MIUnstable)
                .map(|r| r.mi_gain)
                .fold(0.0, f64::max)
        })
        .collect();
    let rows: Vec<Vec<String>> = wps.iter().zip(&gains).map(|(w, g)| vec![num(*w), num(*g)]).collect();
    ctx.csv("mi_gain.csv", &["omega_p[omega_a]", "max_mi_gain[omega_a]"], &rows)?;
    ctx.svg("mi_gain.svg", || {
        LinePlot {
            title: "Largest MI gain over n".into(),
            x_label: "pump frequency omega_p / omega_a".into(),
            y_label: "gain (omega_a)".into(),
            series: vec![Series::new(
                "MI gain",
                wps.iter().copied().zip(gains.iter().copied()).collect(),
            )],
            ..Default::default()
        }
        .to_svg()
    })
}

/// Input-output curve and Fano factor for a small-n, strongly nonlinear system.
fn near_fock(ctx: &mut Ctx, s: &SystemParams, wp: f64) -> Result<(), CliError> {
    ctx.param("system", s);
    ctx.param("omega_p", wp);
    let (lo, hi) = super::commands::kernel_window(&s.kernel);
    write_kernel_scan(ctx, &s.kernel, &linspace(lo, hi, 4001), "loss_profile")?;
    let grid = flux_grid(s, &[wp], 0.5, 400.0, 800);
    let curves = write_sweep(ctx, s, wp, &grid, "input_output")?;
    // The minimum is sharp in n, so sample finely.
    let ns = linspace(1.0, 150.0, 5961);
    let rows = noise_rows(s, wp, &ns, NoiseMethodArg::Both);
    write_noise(ctx, &rows, "fano_factor")?;
    let best = rows
        .iter()
        .filter(|r| r.class == StabilityClass::Stable && r.var_x_exact.is_finite())
        .min_by(|a, b| a.var_x_exact.total_cmp(&b.var_x_exact));
    if let Some(b) = best {
        ctx.param(
            "min_stable_fano",
            serde_json::json!({ "n": b.n, "fano": b.var_x_exact }),
        );
    }
    ctx.svg("input_output.svg", || {
        let mut pts = Vec::new();
        let mut bad = Vec::new();
        for c in &curves {
            for (f, n, cls) in c {
                let st = *cls == StabilityClass::Stable;
                pts.push((*f, if st { *n } else { f64::NAN }));
                bad.push((*f, if st { f64::NAN } else { *n }));
            }
            pts.push((f64::NAN, f64::NAN));
            bad.push((f64::NAN, f64::NAN));
        }
        LinePlot {
            title: format!("Input-output at omega_p = {wp}"),
            x_label: "pump flux |s|^2 (omega_a)".into(),
            y_label: "photon number n".into(),
            series: vec![Series::new("stable", pts), Series::new("unstable", bad)],
            ..Default::default()
        }
        .to_svg()
    })?;
    ctx.svg("fano_factor.svg", || {
        let fin = |v: f64| if v.is_finite() && v < 10.0 { v } else { f64::NAN };
        LinePlot {
            title: "Fano factor".into(),
            x_label: "photon number n".into(),
            y_label: "F".into(),
            y_axis: Axis { log: true },
            series: vec![
                Series::new("exact", rows.iter().map(|r| (r.n, fin(r.var_x_exact))).collect()),
                Series::new(
                    "adiabatic",
                    rows.iter().map(|r| (r.n, fin(r.var_x_adiabatic))).collect(),
                ),
            ],
            ..Default::default()
        }
        .to_svg()
    })
}

fn si_fig4(ctx: &mut Ctx) -> Result<(), CliError> {
    for ratio in [0.1, 1.0, 10.0] {
        let s = fw(ratio * 1e-2, 1e-2, 1.01, 1e-10);
        // Stronger coupling pushes both instabilities to larger detuning and power.
        let (w_hi, n_hi) = if ratio > 1.0 { (1.25, 1e11) } else { (1.06, 1e9) };
        let stem = format!("phase_kappa_over_gamma_{ratio}");
        ctx.param(&stem, &s);
        write_phase(
            ctx,
            &s,
            &linspace(0.97, w_hi, 160),
            &logspace(1e6, n_hi, 160),
            &stem,
            &format!("kappa/gamma = {ratio}"),
        )?;
    }
    Ok(())
}

fn fano_figure(ctx: &mut Ctx, r_d: f64, sigma: Parity) -> Result<(), CliError> {
    let s = fano_system(r_d, sigma);
    ctx.param("system", &s);
    let fsr = s.kernel.period().unwrap_or(0.2);
    write_kernel_scan(ctx, &s.kernel, &linspace(1.0 - fsr, 1.0 + fsr, 4001), "loss_profile")?;
    write_phase(
        ctx,
        &s,
        &linspace(1.0 - 0.5 * fsr, 1.0 + 0.5 * fsr, 200),
        &logspace(1.0, 1e4, 200),
        "phase_diagram",
        &format!("Fano mirror, r_d = {r_d}"),
    )
}
