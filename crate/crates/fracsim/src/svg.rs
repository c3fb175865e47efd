//! Minimal SVG emitters: rose diagrams, bar histograms, and network plots.
//! Data-only figures; petals are count-proportional.

use crate::analyze::AngleHistogram;
use crate::geometry::{direction, Trace, TraceKind};
use crate::region::Rect;
use std::fmt::Write;

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    )
}

/// Rose diagram: one wedge per bin, radius proportional to count. Folded
/// histograms (period 180) are mirrored so the rose stays point-symmetric.
pub fn rose_svg(hist: &AngleHistogram, size: f64) -> String {
    let cx = size / 2.0;
    let cy = size / 2.0;
    let rmax = size / 2.0 - 10.0;
    let max = hist.counts.iter().cloned().max().unwrap_or(0).max(1) as f64;
    let mut out = header(size, size);
    let _ = writeln!(
        out,
        "  <circle cx=\"{cx}\" cy=\"{cy}\" r=\"{rmax}\" fill=\"none\" stroke=\"#ccc\"/>"
    );
    let mirror = if hist.period < 360.0 { 2 } else { 1 };
    for rep in 0..mirror {
        let shift = rep as f64 * hist.period;
        for (i, &c) in hist.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let r = rmax * c as f64 / max;
            let a0 = i as f64 * hist.bin_width + shift;
            let a1 = a0 + hist.bin_width;
            let (dx0, dy0) = direction(a0);
            let (dx1, dy1) = direction(a1);
            // SVG y grows downward; azimuth 0 points up.
            let _ = writeln!(
                out,
                "  <path d=\"M {cx} {cy} L {:.3} {:.3} A {r:.3} {r:.3} 0 0 1 {:.3} {:.3} Z\" fill=\"#4477aa\" fill-opacity=\"0.7\" stroke=\"#223\"/>",
                cx + r * dx0,
                cy - r * dy0,
                cx + r * dx1,
                cy - r * dy1
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Plain bar histogram from labeled counts.
pub fn bars_svg(labels: &[String], counts: &[u64], width: f64, height: f64) -> String {
    assert_eq!(labels.len(), counts.len());
    let max = counts.iter().cloned().max().unwrap_or(0).max(1) as f64;
    let margin = 20.0;
    let bw = (width - 2.0 * margin) / counts.len().max(1) as f64;
    let mut out = header(width, height);
    for (i, &c) in counts.iter().enumerate() {
        let h = (height - 2.0 * margin) * c as f64 / max;
        let x = margin + i as f64 * bw;
        let y = height - margin - h;
        let _ = writeln!(
            out,
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"#4477aa\" stroke=\"#223\"/>",
            bw * 0.9
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"8\" text-anchor=\"middle\">{}</text>",
            x + bw * 0.45,
            height - margin + 10.0,
            labels[i]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Two histograms side by side (verification figure style).
pub fn side_by_side_svg(a: &AngleHistogram, b: &AngleHistogram, width: f64, height: f64) -> String {
    let labels = |h: &AngleHistogram| -> Vec<String> {
        (0..h.counts.len())
            .map(|i| format!("{}", (i as f64 * h.bin_width) as i64))
            .collect()
    };
    let left = bars_svg(&labels(a), &a.counts, width / 2.0, height);
    let right = bars_svg(&labels(b), &b.counts, width / 2.0, height);
    let mut out = header(width, height);
    let _ = writeln!(out, "  <g>{}</g>", inner(&left));
    let _ = writeln!(out, "  <g transform=\"translate({},0)\">{}</g>", width / 2.0, inner(&right));
    out.push_str("</svg>\n");
    out
}

/// Network plot: known traces dark, simulated traces red, optional region box.
pub fn network_svg(traces: &[Trace], domain: Rect, region: Option<Rect>, size: f64) -> String {
    let sx = size / (domain.xmax - domain.xmin);
    let sy = size / (domain.ymax - domain.ymin);
    let s = sx.min(sy);
    let tx = |x: f64| (x - domain.xmin) * s;
    // Flip y so north is up.
    let ty = |y: f64| size - (y - domain.ymin) * s;
    let mut out = header(size, size);
    let _ = writeln!(
        out,
        "  <rect x=\"0\" y=\"0\" width=\"{size}\" height=\"{size}\" fill=\"white\" stroke=\"#888\"/>"
    );
    if let Some(r) = region {
        let _ = writeln!(
            out,
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#aa7744\" stroke-dasharray=\"4 3\"/>",
            tx(r.xmin),
            ty(r.ymax),
            (r.xmax - r.xmin) * s,
            (r.ymax - r.ymin) * s
        );
    }
    for t in traces {
        let color = match t.kind {
            TraceKind::Known => "#223344",
            TraceKind::Simulated => "#cc3311",
        };
        let pts: Vec<String> = t
            .polyline()
            .iter()
            .map(|p| format!("{:.3},{:.3}", tx(p.x), ty(p.y)))
            .collect();
        let _ = writeln!(
            out,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>",
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Overlay of labeled (x, y) series as polylines, e.g. breakthrough curves.
pub fn curves_svg(series: &[(&str, &[f64], &[f64])], width: f64, height: f64) -> String {
    const COLORS: [&str; 4] = ["#223344", "#cc3311", "#448833", "#aa7744"];
    let margin = 30.0;
    let mut xmax = f64::MIN_POSITIVE;
    let mut ymax = f64::MIN_POSITIVE;
    for (_, xs, ys) in series {
        xmax = xs.iter().fold(xmax, |m, v| m.max(*v));
        ymax = ys.iter().fold(ymax, |m, v| m.max(*v));
    }
    let sx = (width - 2.0 * margin) / xmax;
    let sy = (height - 2.0 * margin) / ymax;
    let mut out = header(width, height);
    let _ = writeln!(
        out,
        "  <rect x=\"{margin}\" y=\"{margin}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#888\"/>",
        width - 2.0 * margin,
        height - 2.0 * margin
    );
    for (i, (label, xs, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| format!("{:.2},{:.2}", margin + x * sx, height - margin - y * sy))
            .collect();
        let _ = writeln!(
            out,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"{color}\">{label}</text>",
            margin + 6.0,
            margin + 14.0 + i as f64 * 13.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn inner(svg: &str) -> &str {
    let start = svg.find('\n').map(|i| i + 1).unwrap_or(0);
    let end = svg.rfind("</svg>").unwrap_or(svg.len());
    &svg[start..end]
}
