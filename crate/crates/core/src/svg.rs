//! Standalone SVG heatmaps with an embedded colour scale.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::presets::PlotSpec;

const VIRIDIS: [(f64, f64, f64); 9] = [
    (68.0, 1.0, 84.0),
    (71.0, 44.0, 122.0),
    (59.0, 81.0, 139.0),
    (44.0, 113.0, 142.0),
    (33.0, 144.0, 141.0),
    (39.0, 173.0, 129.0),
    (92.0, 200.0, 99.0),
    (170.0, 220.0, 50.0),
    (253.0, 231.0, 37.0),
];

/// Viridis-like colour for `u` in `[0, 1]`.
pub fn colour(u: f64) -> String {
    let u = u.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (u.floor() as usize).min(VIRIDIS.len() - 2);
    let f = u - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e3).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render `values` (row-major, `y` outer, `x` inner) as a heatmap. Non-finite
/// cells are drawn grey.
pub fn heatmap(plot: &PlotSpec, values: &[f64]) -> Result<String> {
    let nx = plot.x.values.len();
    let ny = plot.y.values.len();
    if values.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!(
            "heatmap needs {nx}x{ny} values, got {}",
            values.len()
        )));
    }
    let finite: Vec<f64> = values.iter().cloned().filter(|v| v.is_finite()).collect();
    let (lo, hi) = if finite.is_empty() {
        (0.0, 1.0)
    } else {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) }
    };
    let (x0, y0, w, h) = (90.0, 40.0, 440.0, 400.0);
    let (cw, ch) = (w / nx as f64, h / ny as f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="680" height="520" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="680" height="520" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, x0 + w / 2.0, escape(&plot.title));
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let fill = if v.is_finite() { colour((v - lo) / (hi - lo)) } else { "#999999".into() };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                x0 + i as f64 * cw,
                y0 + h - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    let picks = |n: usize| -> Vec<usize> {
        let mut v = vec![0, n / 2, n - 1];
        v.dedup();
        v
    };
    for i in picks(nx) {
        let x = x0 + (i as f64 + 0.5) * cw;
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + h, y0 + h + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + h + 18.0, tick(plot.x.values[i]));
    }
    for j in picks(ny) {
        let y = y0 + h - (j as f64 + 0.5) * ch;
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick(plot.y.values[j]));
    }
    let scale = |log: bool| if log { " (log scale)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        x0 + w / 2.0,
        y0 + h + 40.0,
        escape(&plot.x.label),
        scale(plot.x.log)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}{}</text>"#,
        y0 + h / 2.0,
        y0 + h / 2.0,
        escape(&plot.y.label),
        scale(plot.y.log)
    );
    let bx = x0 + w + 40.0;
    let steps = 64;
    for k in 0..steps {
        let u = k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            y0 + h - (k + 1) as f64 * h / steps as f64,
            h / steps as f64 + 0.05,
            colour(u)
        );
    }
    let _ = writeln!(s, r#"<rect x="{bx}" y="{y0}" width="20" height="{h}" fill="none" stroke="black"/>"#);
    for (u, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, bx + 26.0, y0 + h - u * h + 4.0, tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, bx + 10.0, y0 - 8.0, plot.metric.name());
    s.push_str("</svg>\n");
    Ok(s)
}
