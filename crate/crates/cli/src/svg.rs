//! Minimal SVG plots: log-log scatter with envelope and fit, line series,
//! and polygon drawings. Output depends only on the data.

use brenier_core::geometry::{ConvexPolygon, Vec2};
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for (a, b) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                let m = 0.05 * (r.1 - r.0);
                (r.0 - m, r.1 + m)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }
}

fn header(title: &str, xlabel: &str, ylabel: &str, axes: &Axes) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (vx, vy) = (axes.x.0 + t * (axes.x.1 - axes.x.0), axes.y.0 + t * (axes.y.1 - axes.y.0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{vx:.3}</text>"#, axes.px(vx), y0 + 18.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{vy:.3}</text>"#, x0 - 6.0, axes.py(vy) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of `(log₁₀ x, log₁₀ y)` with highlighted envelope points and the
/// fitted line `log y = intercept + slope·log x` (natural logarithms).
pub fn loglog_scatter(
    title: &str,
    points: &[(f64, f64)],
    envelope: &[(f64, f64)],
    fit: Option<(f64, f64)>,
    xlabel: &str,
    ylabel: &str,
) -> String {
    let lg = |p: &(f64, f64)| (p.0.log10(), p.1.log10());
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(lg).collect();
    let env: Vec<(f64, f64)> = envelope.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(lg).collect();
    let axes = Axes::fit(pts.iter().chain(&env).copied());
    let mut s = header(title, &format!("log10 {xlabel}"), &format!("log10 {ylabel}"), &axes);
    for (x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#999999"/>"##, axes.px(*x), axes.py(*y));
    }
    for (x, y) in &env {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#, axes.px(*x), axes.py(*y), PALETTE[1]);
    }
    if let (Some((slope, intercept)), Some(first), Some(last)) = (fit, env.first(), env.last()) {
        let line = |lx: f64| (intercept + slope * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
            axes.px(first.0),
            axes.py(line(first.0)),
            axes.px(last.0),
            axes.py(line(last.0)),
            PALETTE[0]
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" fill="{}">slope {slope:.4}</text>"#, W - 200.0, 55.0, PALETTE[0]);
    }
    s.push_str("</svg>\n");
    s
}

/// Polylines, one per labeled series.
pub fn line_series(title: &str, series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let axes = Axes::fit(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut s = header(title, xlabel, ylabel, &axes);
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", axes.px(*x), axes.py(*y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for (x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, axes.px(*x), axes.py(*y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#, MARGIN + 10.0, MARGIN + 16.0 * k as f64, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

/// Outlined polygons (cells) over filled ones (holes), fitted to the page.
pub fn polygons(title: &str, cells: &[&ConvexPolygon], filled: &[&ConvexPolygon], dots: &[Vec2]) -> String {
    let all = cells.iter().chain(filled).flat_map(|p| p.vertices().iter().map(|v| (v.x, v.y)));
    let b = Axes::fit(all);
    // equal scaling on both axes
    let span = (b.x.1 - b.x.0).max(b.y.1 - b.y.0);
    let c = (0.5 * (b.x.0 + b.x.1), 0.5 * (b.y.0 + b.y.1));
    let axes = Axes { x: (c.0 - 0.5 * span, c.0 + 0.5 * span), y: (c.1 - 0.5 * span, c.1 + 0.5 * span) };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let path = |p: &ConvexPolygon| {
        let pts: Vec<String> = p.vertices().iter().map(|v| format!("{:.2},{:.2}", axes.px(v.x), axes.py(v.y))).collect();
        pts.join(" ")
    };
    for p in filled {
        let _ = writeln!(s, r##"<polygon points="{}" fill="#dddddd" stroke="black"/>"##, path(p));
    }
    for p in cells {
        let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="0.5"/>"#, path(p), PALETTE[0]);
    }
    for d in dots {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1" fill="{}"/>"#, axes.px(d.x), axes.py(d.y), PALETTE[1]);
    }
    s.push_str("</svg>\n");
    s
}
