//! Bare-bones SVG output: line plots and heatmaps with optional log axes.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct Axis {
    pub log: bool,
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px0: f64,
    px1: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool, px0: f64, px1: f64) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if hi <= lo {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
            if log && lo <= 0.0 {
                lo = hi / 100.0;
            }
        }
        Self { lo, hi, log, px0, px1 }
    }

    fn t(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.px0 + (self.px1 - self.px0) * self.t(v)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().ceil() as i32, self.hi.log10().floor() as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(raw);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, xs: &Scale, ys: &Scale) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
    for t in xs.ticks() {
        let x = xs.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ccc"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            TOP,
            H - BOTTOM,
            H - BOTTOM + 16.0,
            label(t)
        );
    }
    for t in ys.ticks() {
        let y = ys.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>
<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        W - RIGHT - LEFT,
        H - BOTTOM - TOP,
        (LEFT + W - RIGHT) / 2.0,
        H - 14.0,
        escape(x_label),
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let xs = Scale::new(all().map(|p| p.0), self.x_axis.log, LEFT, W - RIGHT);
        let ys = Scale::new(all().map(|p| p.1), self.y_axis.log, H - BOTTOM, TOP);
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, &xs, &ys);
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            // Break the polyline at non-finite or off-axis points.
            let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &s.points {
                let ok = x.is_finite() && y.is_finite() && (!xs.log || x > 0.0) && (!ys.log || y > 0.0);
                if ok {
                    runs.last_mut().unwrap().push((xs.px(x), ys.px(y.clamp(ys.lo, ys.hi))));
                } else if !runs.last().unwrap().is_empty() {
                    runs.push(Vec::new());
                }
            }
            for r in runs.iter().filter(|r| !r.is_empty()) {
                let pts: Vec<String> = r.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                W - RIGHT + 10.0,
                W - RIGHT + 30.0,
                W - RIGHT + 34.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// How heatmap cell values map to colors.
#[derive(Debug, Clone)]
pub enum Palette {
    /// Integer category index into `(color, legend label)` pairs.
    Categorical(Vec<(String, String)>),
    /// Linear white-to-blue ramp between the finite extremes.
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_axis: Axis,
    /// Row-major over x: `values[i * y.len() + j]` belongs to `(x[i], y[j])`.
    pub values: Vec<f64>,
    pub palette: Palette,
}

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let xs = Scale::new(self.x.iter().copied(), false, LEFT, W - RIGHT);
        let ys = Scale::new(self.y.iter().copied(), self.y_axis.log, H - BOTTOM, TOP);
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, &xs, &ys);
        let (vmin, vmax) = self
            .values
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let edges = |c: &[f64], s: &Scale, k: usize| -> (f64, f64) {
            let at = |v: f64| s.px(v);
            let lo = if k == 0 {
                at(c[0])
            } else {
                0.5 * (at(c[k - 1]) + at(c[k]))
            };
            let hi = if k + 1 == c.len() {
                at(c[k])
            } else {
                0.5 * (at(c[k]) + at(c[k + 1]))
            };
            (lo.min(hi), lo.max(hi))
        };
        let ny = self.y.len();
        for i in 0..self.x.len() {
            let (x0, x1) = edges(&self.x, &xs, i);
            for j in 0..ny {
                let (y0, y1) = edges(&self.y, &ys, j);
                let v = self.values[i * ny + j];
                let color = match &self.palette {
                    Palette::Categorical(c) => c
                        .get(v as usize)
                        .map(|p| p.0.clone())
                        .unwrap_or_else(|| "#ff00ff".into()),
                    Palette::Continuous => {
                        let t = if v.is_finite() && vmax > vmin {
                            (v - vmin) / (vmax - vmin)
                        } else {
                            0.0
                        };
                        let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
                        format!("#{:02x}{:02x}{:02x}", c(255.0, 8.0), c(255.0, 48.0), c(255.0, 107.0))
                    }
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                    (x1 - x0).max(0.5),
                    (y1 - y0).max(0.5)
                );
            }
        }
        match &self.palette {
            Palette::Categorical(c) => {
                for (k, (color, name)) in c.iter().enumerate() {
                    let ly = TOP + 8.0 + 18.0 * k as f64;
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.1}" y="{ly:.1}" width="12" height="12" fill="{color}" stroke="black"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                        W - RIGHT + 10.0,
                        W - RIGHT + 28.0,
                        ly + 10.0,
                        escape(name)
                    );
                }
            }
            Palette::Continuous => {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}">min {}</text><text x="{:.1}" y="{:.1}">max {}</text>"#,
                    W - RIGHT + 10.0,
                    TOP + 14.0,
                    label(vmin),
                    W - RIGHT + 10.0,
                    TOP + 32.0,
                    label(vmax)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}
