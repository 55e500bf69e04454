//! Standalone SVG figures: bound curves in dB against `F_T`, measured points
//! with rectangular error bars, and the ideal-amplifier reference.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use qi_core::bound::{ft_grid, sample_curve};
use qi_core::db::to_db;
use qi_core::meta::{AnalysisReport, IDEAL_OPA_ID};
use qi_core::opa::{ideal_bound_db, s_minus};
use qi_core::{BoundOptions, QiCurve, Variant, WindowKind};

use crate::config::Settings;
use crate::CliError;

/// Trapezoid side lengths shown in figure 8.
pub const TRAPEZOID_FAMILY: [f64; 6] = [0.001, 0.2, 0.5, 1.0, 3.0, 5.0];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#ff7f0e", "#393b79",
    "#7f7f7f", "#637939",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
    ThickSolid,
    ThickDashed,
}

impl Stroke {
    fn attributes(self) -> &'static str {
        match self {
            Stroke::Solid => r#"stroke-width="1.5""#,
            Stroke::Dashed => r#"stroke-width="1.5" stroke-dasharray="6 4""#,
            Stroke::Dotted => r#"stroke-width="1.8" stroke-dasharray="1.5 3""#,
            Stroke::ThickSolid => r#"stroke-width="3""#,
            Stroke::ThickDashed => r#"stroke-width="3" stroke-dasharray="9 5""#,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub stroke: Stroke,
    /// `(x, y)` with `y` in dB; `-∞` allowed.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub x_err: f64,
    pub y_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    /// `(floor, top)` in dB.
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    pub points: Vec<PlotPoint>,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        if !(x0.is_finite() && x1.is_finite() && x1 > x0 && y0.is_finite() && y1.is_finite() && y1 > y0) {
            return Err(CliError::Usage("plot ranges must be finite and non-empty".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.series {
            if !seen.insert(s.id.as_str()) {
                return Err(CliError::Usage(format!("curve `{}` listed twice", s.id)));
            }
        }
        Ok(())
    }
}

fn px(spec: &PlotSpec, x: f64) -> f64 {
    let (x0, x1) = spec.x_range;
    LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT)
}

fn py(spec: &PlotSpec, y: f64) -> f64 {
    let (y0, y1) = spec.y_range;
    TOP + (y1 - y) / (y1 - y0) * (HEIGHT - TOP - BOTTOM)
}

fn inside(spec: &PlotSpec, y: f64) -> bool {
    y >= spec.y_range.0 && y <= spec.y_range.1
}

// Crossing of the floor or ceiling between an inside point and an outside one.
fn crossing(spec: &PlotSpec, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let limit = if b.1 > spec.y_range.1 { spec.y_range.1 } else { spec.y_range.0 };
    if !b.1.is_finite() {
        return (b.0, limit);
    }
    let t = (limit - a.1) / (b.1 - a.1);
    (a.0 + t * (b.0 - a.0), limit)
}

type Polyline = Vec<(f64, f64)>;

/// Splits samples into visible polylines; the second element lists clip points.
fn clip(spec: &PlotSpec, samples: &[(f64, f64)]) -> (Vec<Polyline>, Polyline) {
    let mut runs = Vec::new();
    let mut marks = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &p in samples {
        let now_in = inside(spec, p.1);
        match prev {
            Some(q) if inside(spec, q.1) && !now_in => {
                let c = crossing(spec, q, p);
                current.push(c);
                marks.push(c);
                runs.push(std::mem::take(&mut current));
            }
            Some(q) if !inside(spec, q.1) && now_in => {
                let c = crossing(spec, p, q);
                marks.push(c);
                current.push(c);
            }
            _ => {}
        }
        if now_in {
            current.push(p);
        }
        prev = Some(p);
    }
    if current.len() > 1 {
        runs.push(current);
    }
    (runs, marks)
}

fn tick_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `spec` as a standalone SVG document. Output depends only on `spec`.
pub fn render_svg(spec: &PlotSpec) -> Result<String, CliError> {
    spec.validate()?;
    let mut s = String::new();
    let w = |s: &mut String, line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    w(
        &mut s,
        format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        ),
    );
    w(&mut s, format!(r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#));
    w(
        &mut s,
        format!(
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(&spec.title)
        ),
    );

    let (x0, x1) = spec.x_range;
    let (y0, y1) = spec.y_range;
    let (left, right, top, bottom) = (px(spec, x0), px(spec, x1), py(spec, y1), py(spec, y0));
    w(&mut s, r##"<g stroke="#cccccc" stroke-width="0.5">"##.to_string());
    let x_step = if x1 - x0 > 0.5 { 0.1 } else { 0.05 };
    for x in tick_values(x0, x1, x_step) {
        w(&mut s, format!(r#"<line x1="{0:.2}" y1="{top:.2}" x2="{0:.2}" y2="{bottom:.2}"/>"#, px(spec, x)));
    }
    let y_step = if y1 - y0 > 12.0 { 5.0 } else { 1.0 };
    for y in tick_values(y0, y1, y_step) {
        w(&mut s, format!(r#"<line x1="{left:.2}" y1="{0:.2}" x2="{right:.2}" y2="{0:.2}"/>"#, py(spec, y)));
    }
    w(&mut s, "</g>".to_string());
    w(
        &mut s,
        format!(
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        ),
    );
    for x in tick_values(x0, x1, x_step) {
        w(
            &mut s,
            format!(
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
                px(spec, x),
                bottom + 16.0
            ),
        );
    }
    for y in tick_values(y0, y1, y_step) {
        w(
            &mut s,
            format!(
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                py(spec, y) + 4.0,
                y
            ),
        );
    }
    w(
        &mut s,
        format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            HEIGHT - 18.0,
            escape(&spec.x_label)
        ),
    );
    w(
        &mut s,
        format!(
            r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
            (top + bottom) / 2.0,
            escape(&spec.y_label)
        ),
    );

    for (i, series) in spec.series.iter().enumerate() {
        let colour = if series.id == IDEAL_OPA_ID { "#000000" } else { PALETTE[i % PALETTE.len()] };
        let (runs, marks) = clip(spec, &series.samples);
        w(&mut s, format!(r#"<g id="{}" fill="none" stroke="{colour}">"#, escape(&series.id)));
        for run in runs {
            let pts: Vec<String> = run
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(spec, x), py(spec, y)))
                .collect();
            w(&mut s, format!(r#"<polyline {} points="{}"/>"#, series.stroke.attributes(), pts.join(" ")));
        }
        for (x, y) in marks {
            w(
                &mut s,
                format!(
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="white" stroke-width="1.2"/>"#,
                    px(spec, x),
                    py(spec, y)
                ),
            );
        }
        w(&mut s, "</g>".to_string());
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        w(
            &mut s,
            format!(
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" {}/>"#,
                lx + 30.0,
                series.stroke.attributes()
            ),
        );
        w(
            &mut s,
            format!(
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 36.0,
                ly + 4.0,
                escape(&series.id)
            ),
        );
    }

    if !spec.points.is_empty() {
        w(&mut s, r#"<g id="points" stroke="black">"#.to_string());
        for p in &spec.points {
            let y = p.y.clamp(y0, y1);
            let (rx0, rx1) = (px(spec, (p.x - p.x_err).max(x0)), px(spec, (p.x + p.x_err).min(x1)));
            let (ry0, ry1) = (py(spec, (y + p.y_err).min(y1)), py(spec, (y - p.y_err).max(y0)));
            let mut line = String::new();
            let _ = write!(
                line,
                r#"<rect x="{rx0:.2}" y="{ry0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke-width="0.8"/>"#,
                rx1 - rx0,
                ry1 - ry0
            );
            w(&mut s, line);
            let fill = if y == p.y { "black" } else { "white" };
            w(
                &mut s,
                format!(
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}"><title>{}</title></circle>"#,
                    px(spec, p.x),
                    py(spec, y),
                    escape(&p.id)
                ),
            );
        }
        w(&mut s, "</g>".to_string());
    }
    w(&mut s, "</svg>".to_string());
    Ok(s)
}

fn curve_series(c: &QiCurve, stroke: Stroke, grid: &[f64], opts: &BoundOptions) -> Result<Series, CliError> {
    Ok(Series {
        id: c.id(),
        stroke,
        samples: sample_curve(c, grid, opts)?.into_iter().map(|s| (s.ft, s.r_db)).collect(),
    })
}

fn ideal_series(stroke: Stroke, grid: &[f64]) -> Result<Series, CliError> {
    Ok(Series {
        id: IDEAL_OPA_ID.to_string(),
        stroke,
        samples: grid
            .iter()
            .map(|&ft| ideal_bound_db(ft).map(|r| (ft, r)))
            .collect::<qi_core::Result<_>>()?,
    })
}

fn report_points(report: Option<&AnalysisReport>) -> Vec<PlotPoint> {
    report
        .map(|r| {
            r.per_record
                .iter()
                .map(|p| PlotPoint {
                    id: p.id.clone(),
                    x: p.ft_used.get(),
                    y: p.r_db_used.get(),
                    x_err: p.ft_err.get(),
                    y_err: p.s_err_db.get(),
                })
                .collect()
        })
        .unwrap_or_default()
}

fn ft_spec(title: &str, settings: &Settings, series: Vec<Series>, report: Option<&AnalysisReport>) -> PlotSpec {
    PlotSpec {
        title: title.to_string(),
        x_label: "F_T (fraction of period squeezed)".to_string(),
        y_label: "R (dB)".to_string(),
        x_range: (0.0, 1.0),
        y_range: (settings.db_floor, 0.0),
        series,
        points: report_points(report),
    }
}

fn closed(window: WindowKind, variant: Variant, scale: f64) -> Result<QiCurve, CliError> {
    Ok(QiCurve::closed_form(window, variant)?.with_scale(scale)?)
}

fn fitted_or(report: Option<&AnalysisReport>, id: &str, fallback: f64) -> f64 {
    report
        .and_then(|r| r.fitted_scales.get(id))
        .map(|f| f.envelope.get())
        .unwrap_or(fallback)
}

/// Checks that each series lies on or above the next over `F_T ∈ {0.05, …, 0.45}`.
pub fn check_ordering(series: &[&Series]) -> Result<(), CliError> {
    for pair in series.windows(2) {
        for (a, b) in pair[0].samples.iter().zip(&pair[1].samples) {
            let on_check_grid = (a.0 * 100.0).round() as i64 % 5 == 0 && a.0 >= 0.05 - 1e-12 && a.0 <= 0.45 + 1e-12;
            if on_check_grid && a.1 < b.1 {
                return Err(CliError::Invariant(format!(
                    "{} lies below {} at F_T = {}",
                    pair[0].id, pair[1].id, a.0
                )));
            }
        }
    }
    Ok(())
}

/// Preset reproducing one of the figures (4 to 8).
pub fn figure(fig: u8, settings: &Settings, report: Option<&AnalysisReport>) -> Result<PlotSpec, CliError> {
    let opts = BoundOptions {
        quad: settings.quad,
        ..BoundOptions::default()
    };
    let fine = ft_grid(0.005, 1.0, 0.005)?;
    match fig {
        4 => {
            let xs = ft_grid(0.005, 0.995, 0.005)?;
            let samples = xs
                .iter()
                .map(|&x| s_minus(x, 1.0, 0.0).map(|s| (x, to_db(s))))
                .collect::<qi_core::Result<_>>()?;
            Ok(PlotSpec {
                title: "Ideal OPA: minimum variance vs pump ratio (β = 1, ω/γ → 0)".to_string(),
                x_label: "x = P/P_th".to_string(),
                y_label: "S- (dB)".to_string(),
                x_range: (0.0, 1.0),
                y_range: (settings.db_floor, 0.0),
                series: vec![Series {
                    id: "ideal-opa-s-minus".to_string(),
                    stroke: Stroke::Solid,
                    samples,
                }],
                points: Vec::new(),
            })
        }
        5 => {
            let paper = curve_series(&closed(WindowKind::Gaussian, Variant::PaperWithPi, 1.0)?, Stroke::Dotted, &fine, &opts)?;
            let marecki = curve_series(&closed(WindowKind::Gaussian, Variant::MareckiNoPi, 1.0)?, Stroke::Dashed, &fine, &opts)?;
            let ideal = ideal_series(Stroke::ThickSolid, &fine)?;
            check_ordering(&[&paper, &marecki, &ideal])?;
            Ok(ft_spec("R vs F_T: Gaussian sampling", settings, vec![paper, marecki, ideal], report))
        }
        6 => {
            let paper = curve_series(
                &closed(WindowKind::LorentzianSquared, Variant::PaperWithPi, 1.0)?,
                Stroke::Solid,
                &fine,
                &opts,
            )?;
            let marecki = curve_series(
                &closed(WindowKind::LorentzianSquared, Variant::MareckiNoPi, 1.0)?,
                Stroke::Dashed,
                &fine,
                &opts,
            )?;
            let ideal = ideal_series(Stroke::ThickDashed, &fine)?;
            Ok(ft_spec("R vs F_T: squared-Lorentzian sampling", settings, vec![paper, marecki, ideal], report))
        }
        7 => {
            let kl = fitted_or(report, "lorentzian2-paper", 1.0 / (3.0 * PI));
            let kg = fitted_or(report, "gaussian-paper", 1.0 / (4.0 * PI));
            let lor = curve_series(&closed(WindowKind::LorentzianSquared, Variant::PaperWithPi, kl)?, Stroke::Solid, &fine, &opts)?;
            let gau = curve_series(&closed(WindowKind::Gaussian, Variant::PaperWithPi, kg)?, Stroke::Dashed, &fine, &opts)?;
            let ideal = ideal_series(Stroke::ThickSolid, &fine)?;
            Ok(ft_spec("R vs F_T: scaled-argument fits", settings, vec![lor, gau, ideal], report))
        }
        8 => {
            let grid = ft_grid(0.01, 1.0, 0.01)?;
            let mut series = Vec::new();
            for variant in [Variant::PaperWithPi, Variant::MareckiNoPi] {
                let stroke = if variant == Variant::PaperWithPi { Stroke::Dashed } else { Stroke::Solid };
                for n in TRAPEZOID_FAMILY {
                    series.push(curve_series(&QiCurve::trapezoid(n, variant)?, stroke, &grid, &opts)?);
                }
            }
            series.push(ideal_series(Stroke::ThickSolid, &grid)?);
            Ok(ft_spec("R vs F_T: trapezoidal sampling", settings, series, report))
        }
        other => Err(CliError::Usage(format!("unknown figure preset {other}; expected 4 to 8"))),
    }
}

/// Arbitrary curves against `F_T`.
pub fn custom(
    curves: &[QiCurve],
    include_ideal: bool,
    settings: &Settings,
    report: Option<&AnalysisReport>,
) -> Result<PlotSpec, CliError> {
    let opts = BoundOptions {
        quad: settings.quad,
        ..BoundOptions::default()
    };
    let grid = ft_grid(0.01, 1.0, 0.01)?;
    let strokes = [Stroke::Solid, Stroke::Dashed, Stroke::Dotted];
    let mut series = curves
        .iter()
        .enumerate()
        .map(|(i, c)| curve_series(c, strokes[i % strokes.len()], &grid, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    if include_ideal {
        series.push(ideal_series(Stroke::ThickSolid, &grid)?);
    }
    Ok(ft_spec("R vs F_T", settings, series, report))
}
