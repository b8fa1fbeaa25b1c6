//! Minimal self-contained SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// One polyline through `points` (drawn in the given order) with a framed
/// axis box, tick labels at the data extremes and axis titles.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    // Writing into a String cannot fail.
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let text = |s: &mut String, x: f64, y: f64, anchor: &str, extra: &str, body: &str| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="12"{extra}>{}</text>"#,
            escape(body)
        );
    };
    text(&mut s, WIDTH / 2.0, MARGIN / 2.0, "middle", "", title);
    text(&mut s, WIDTH / 2.0, HEIGHT - 15.0, "middle", "", x_label);
    let (ly, lx) = (HEIGHT / 2.0, 15.0);
    text(&mut s, lx, ly, "middle", &format!(r#" transform="rotate(-90 {lx} {ly})""#), y_label);
    text(&mut s, MARGIN, HEIGHT - MARGIN + 16.0, "middle", "", &format!("{x0:.4e}"));
    text(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "middle", "", &format!("{x1:.4e}"));
    text(&mut s, MARGIN - 4.0, HEIGHT - MARGIN, "end", "", &format!("{y0:.3e}"));
    text(&mut s, MARGIN - 4.0, MARGIN + 4.0, "end", "", &format!("{y1:.3e}"));
    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, path.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
