//! Self-contained SVG figures: a log-colour heatmap for the grids and a
//! median line with an interquartile band for the sweep.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ExperimentError, Result};
use crate::results::{CellSummary, Quartiles, ResultTable, SINGLE_NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Heatmap,
    QuartileLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    W1,
    W2,
}

impl Metric {
    fn pick(self, s: &CellSummary) -> Option<Quartiles> {
        match self {
            Metric::W1 => s.w1,
            Metric::W2 => s.w2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::W1 => "W1",
            Metric::W2 => "W2",
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const FAIL_COLOUR: &str = "#bdbdbd";

/// Viridis anchors, dark to bright.
const PALETTE: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (t.floor() as usize).min(PALETTE.len() - 2);
    let f = t - i as f64;
    let mix = |a: u8, b: u8| (f64::from(a) + f * (f64::from(b) - f64::from(a))).round() as u8;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn fmt_value(x: f64) -> String {
    if x.is_infinite() {
        "fail".into()
    } else {
        format!("{x:.1e}")
    }
}

fn fmt_axis(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{title}</text>"#,
        WIDTH / 2.0
    );
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        out,
        r#"<text class="y-label" transform="translate(24 {:.1}) rotate(-90)" text-anchor="middle">{y_label}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0
    );
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Median error per cell; rows are example counts, columns exposures (or SNR
/// levels for the noise grid).
pub fn heatmap_svg(table: &ResultTable, metric: Metric) -> Result<String> {
    let experiment = table.experiment()?.to_string();
    let summaries = table.summarize();
    let by_snr = experiment == SINGLE_NOISE;
    let x_of = |s: &CellSummary| {
        if by_snr {
            s.snr_db.unwrap_or(f64::INFINITY)
        } else {
            s.exposure
        }
    };
    let xs = sorted_unique(summaries.iter().map(x_of).collect());
    let ys = sorted_unique(summaries.iter().map(|s| s.examples as f64).collect());
    let logs: Vec<f64> = summaries
        .iter()
        .filter_map(|s| metric.pick(s).map(|q| q.median))
        .filter(|m| m.is_finite() && *m > 0.0)
        .map(f64::log10)
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if logs.is_empty() {
        (0.0, 1.0)
    } else {
        (lo, hi.max(lo + 1e-12))
    };

    let mut out = String::new();
    header(
        &mut out,
        &format!("Median relative {} error ({experiment})", metric.label()),
    );
    let cw = (WIDTH - LEFT - RIGHT) / xs.len() as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / ys.len() as f64;
    for s in &summaries {
        let ix = xs
            .iter()
            .position(|&x| x.total_cmp(&x_of(s)).is_eq())
            .unwrap_or(0);
        let iy = ys.iter().position(|&y| y == s.examples as f64).unwrap_or(0);
        let x = LEFT + ix as f64 * cw;
        // Largest example count on top.
        let y = TOP + (ys.len() - 1 - iy) as f64 * ch;
        let median = metric.pick(s).map_or(f64::INFINITY, |q| q.median);
        let fill = if median.is_finite() && median > 0.0 {
            colour((median.log10() - lo) / (hi - lo))
        } else if median == 0.0 {
            colour(0.0)
        } else {
            FAIL_COLOUR.to_string()
        };
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{}">{}</text>"#,
            x + cw / 2.0,
            y + ch / 2.0 + 4.0,
            if median.is_finite() && (median.log10() - lo) / (hi - lo) > 0.6 {
                "black"
            } else {
                "white"
            },
            fmt_value(median)
        );
    }
    for (i, &x) in xs.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="x-tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (i as f64 + 0.5) * cw,
            HEIGHT - BOTTOM + 18.0,
            fmt_axis(x)
        );
    }
    for (i, &y) in ys.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="y-tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            TOP + (ys.len() - 1 - i) as f64 * ch + ch / 2.0 + 4.0,
            y
        );
    }
    axis_labels(
        &mut out,
        if by_snr { "SNR (dB)" } else { "exposure (s)" },
        "examples",
    );
    // Colour bar.
    let bx = WIDTH - RIGHT + 30.0;
    let bh = HEIGHT - TOP - BOTTOM;
    let steps = 32;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.2}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            TOP + k as f64 * bh / steps as f64,
            bh / steps as f64 + 0.5,
            colour(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">1e{hi:.1}</text>"#,
        bx + 22.0,
        TOP + 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">1e{lo:.1}</text>"#,
        bx + 22.0,
        TOP + bh
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Median, first and third quartile of the error against exposure, on a log
/// axis, with the band between the quartiles shaded. Failed cells sit on a
/// band above the finite range.
pub fn quartile_lines_svg(table: &ResultTable, metric: Metric) -> Result<String> {
    let experiment = table.experiment()?.to_string();
    let mut summaries = table.summarize();
    summaries.sort_by(|a, b| a.exposure.total_cmp(&b.exposure));
    let points: Vec<(f64, Quartiles)> = summaries
        .iter()
        .filter_map(|s| metric.pick(s).map(|q| (s.exposure, q)))
        .collect();
    if points.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let finite: Vec<f64> = points
        .iter()
        .flat_map(|(_, q)| [q.q1, q.median, q.q3])
        .filter(|v| v.is_finite() && *v > 0.0)
        .map(f64::log10)
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = finite
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let (lo, hi) = if finite.is_empty() {
        (-1.0, 0.0)
    } else {
        (lo, hi.max(lo + 1.0))
    };
    let x_lo = points.first().map_or(0.0, |p| p.0);
    let x_hi = points.last().map_or(1.0, |p| p.0).max(x_lo + 1e-12);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let any_failed = points.iter().any(|(_, q)| q.q3.is_infinite());
    let fail_band = if any_failed { 30.0 } else { 0.0 };
    let sy = |v: f64| {
        if v.is_infinite() {
            return TOP;
        }
        let l = if v > 0.0 { v.log10().clamp(lo, hi) } else { lo };
        TOP + fail_band + (hi - l) / (hi - lo) * (ph - fail_band)
    };

    let mut out = String::new();
    header(
        &mut out,
        &format!(
            "Relative {} error vs exposure ({experiment})",
            metric.label()
        ),
    );
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##
    );
    let mut decade = lo as i64;
    while decade <= hi as i64 {
        let y = sy(10f64.powi(decade as i32));
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text class="y-tick" x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
        decade += 1;
    }
    if any_failed {
        let _ = writeln!(
            out,
            r#"<text class="y-tick" x="{:.2}" y="{:.2}" text-anchor="end">fail</text>"#,
            LEFT - 8.0,
            TOP + 4.0
        );
    }
    for (x, _) in &points {
        let _ = writeln!(
            out,
            r#"<text class="x-tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(*x),
            TOP + ph + 18.0,
            fmt_axis(*x)
        );
    }
    let path = |sel: fn(&Quartiles) -> f64| -> String {
        points
            .iter()
            .map(|(x, q)| format!("{:.2},{:.2}", sx(*x), sy(sel(q))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let upper = path(|q| q.q3);
    let lower: Vec<String> = points
        .iter()
        .rev()
        .map(|(x, q)| format!("{:.2},{:.2}", sx(*x), sy(q.q1)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polygon class="iqr" points="{upper} {}" fill="#3b528b" fill-opacity="0.25" stroke="none"/>"##,
        lower.join(" ")
    );
    for (class, sel, width, dash) in [
        (
            "q1",
            (|q: &Quartiles| q.q1) as fn(&Quartiles) -> f64,
            1.0,
            " stroke-dasharray=\"4 3\"",
        ),
        ("median", |q: &Quartiles| q.median, 2.0, ""),
        ("q3", |q: &Quartiles| q.q3, 1.0, " stroke-dasharray=\"4 3\""),
    ] {
        let _ = writeln!(
            out,
            r##"<polyline class="series {class}" points="{}" fill="none" stroke="#3b528b" stroke-width="{width}"{dash}/>"##,
            path(sel)
        );
    }
    let lx = WIDTH - RIGHT + 12.0;
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{:.2}">median</text>"#,
        TOP + 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{:.2}">Q1 / Q3</text>"#,
        TOP + 32.0
    );
    axis_labels(
        &mut out,
        "exposure (periods)",
        &format!("relative {} error", metric.label()),
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_svg(table: &ResultTable, kind: PlotKind, metric: Metric) -> Result<String> {
    if table.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    match kind {
        PlotKind::Heatmap => heatmap_svg(table, metric),
        PlotKind::QuartileLines => quartile_lines_svg(table, metric),
    }
}

pub fn render_plots(
    table: &ResultTable,
    kind: PlotKind,
    metric: Metric,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(table, kind, metric)?;
    std::fs::write(path, svg)?;
    Ok(())
}
