//! Minimal SVG output: line plots and a labelled heat map.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Draw markers instead of a polyline.
    pub markers: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Line plot with axes, min/max tick labels and a legend.
pub fn line_plot(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let (x0, x1) = finite_range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = finite_range(series.iter().flat_map(|s| s.y.iter().copied()));
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{z}" x2="{}" y2="{z}" stroke="#bbb" stroke-dasharray="4 4"/>"##,
            MARGIN,
            WIDTH - MARGIN,
            z = py(0.0)
        );
    }
    let label = |out: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(
        &mut out,
        MARGIN,
        HEIGHT - MARGIN + 16.0,
        "middle",
        format!("{x0:.3}"),
    );
    label(
        &mut out,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        "middle",
        format!("{x1:.3}"),
    );
    label(
        &mut out,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        "middle",
        escape(x_label),
    );
    label(
        &mut out,
        MARGIN - 6.0,
        py(y0) + 4.0,
        "end",
        format!("{y0:.3}"),
    );
    label(
        &mut out,
        MARGIN - 6.0,
        py(y1) + 4.0,
        "end",
        format!("{y1:.3}"),
    );

    for (k, s) in series.iter().enumerate() {
        let points: Vec<(f64, f64)> =
            s.x.iter()
                .zip(s.y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (px(x), py(y)))
                .collect();
        if s.markers {
            for (x, y) in &points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#,
                    s.color
                );
            }
        } else {
            let coords: Vec<String> = points
                .iter()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                coords.join(" ")
            );
        }
        let ly = MARGIN + 4.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx}" y="{}" width="12" height="4" fill="{}"/>"#,
            ly - 4.0,
            s.color
        );
        label(&mut out, lx + 18.0, ly + 2.0, "start", escape(s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Heat map of `values[row][col]`, shaded from white (0) to dark red (`max`),
/// with the value printed in each cell.
pub fn heat_map(
    title: &str,
    col_label: &str,
    cols: &[f64],
    row_label: &str,
    rows: &[f64],
    values: &[Vec<f64>],
    max: f64,
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let cw = (WIDTH - 2.0 * MARGIN) / cols.len().max(1) as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / rows.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        // First row at the bottom.
        let y = HEIGHT - MARGIN - (r + 1) as f64 * ch;
        for (c, v) in row.iter().enumerate() {
            let x = MARGIN + c as f64 * cw;
            let frac = if max > 0.0 {
                (v / max).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let g = (255.0 * (1.0 - frac)).round() as u8;
            let red = (255.0 - 95.0 * frac).round() as u8;
            let _ = writeln!(
                out,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="rgb({red},{g},{g})" stroke="#666" stroke-width="0.5"/>"##
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{v}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    for (c, v) in cols.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{v:.3}</text>"#,
            MARGIN + (c as f64 + 0.5) * cw,
            HEIGHT - MARGIN + 16.0
        );
    }
    for (r, v) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#,
            MARGIN - 6.0,
            HEIGHT - MARGIN - (r as f64 + 0.5) * ch + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(col_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(row_label)
    );
    out.push_str("</svg>\n");
    out
}
