//! Minimal SVG line plot of p-values against the quantile level.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// Polyline of `(alpha, p)` on a [0,1] p-value axis with a dotted line at `reference`.
pub fn pvalue_plot(points: &[(f64, f64)], reference: f64) -> String {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(a, _)| (l.min(a), h.max(a)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let px = |a: f64| MARGIN + (a - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN);
    let py = |p: f64| HEIGHT - MARGIN - p.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    // axes
    writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    )
    .unwrap();
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = py(tick);
        writeln!(s, r#"<text x="{}" y="{:.1}" font-size="12" text-anchor="end">{tick:.2}</text>"#, MARGIN - 6.0, y + 4.0).unwrap();
    }
    for i in 0..=4 {
        let a = lo + (hi - lo) * i as f64 / 4.0;
        writeln!(s, r#"<text x="{:.1}" y="{}" font-size="12" text-anchor="middle">{a:.2}</text>"#, px(a), HEIGHT - MARGIN + 18.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">quantile level</text>"#, WIDTH / 2.0, HEIGHT - 15.0).unwrap();
    writeln!(s, r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">p-value</text>"#, HEIGHT / 2.0, HEIGHT / 2.0).unwrap();
    writeln!(
        s,
        r#"<line x1="{}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="gray" stroke-dasharray="2,4"/>"#,
        MARGIN,
        WIDTH - MARGIN,
        y = py(reference)
    )
    .unwrap();
    let pts: Vec<String> = points.iter().map(|&(a, p)| format!("{:.2},{:.2}", px(a), py(p))).collect();
    writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
    s.push_str("</svg>\n");
    s
}
