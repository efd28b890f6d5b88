//! Static SVG plots built from scatter points and bars.

use std::fmt::Write;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Axes {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Axes { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn frame(out: &mut String, axes: &Axes, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = axes.x0 + f * (axes.x1 - axes.x0);
        let yv = axes.y0 + f * (axes.y1 - axes.y0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, axes.px(xv), b + 16.0, tick(xv));
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, axes.py(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter plot with one color per series and a legend.
pub fn scatter(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    let axes = Axes::fit(all().map(|p| p.0), all().map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out, &axes, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let _ = writeln!(out, r#"<g fill="{}" fill-opacity="0.6">"#, s.color);
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="1.5"/>"#, axes.px(x), axes.py(y));
        }
        out.push_str("</g>\n");
        let ly = MARGIN + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN - 110.0;
        let _ = writeln!(out, r#"<circle cx="{lx}" cy="{}" r="4" fill="{}"/>"#, ly - 4.0, s.color);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{} ({})</text>"#, lx + 10.0, escape(s.name), s.points.len());
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart over contiguous bins `[edges[k], edges[k + 1])`.
pub fn histogram(title: &str, x_label: &str, edges: &[f64], counts: &[u64]) -> String {
    let axes = Axes::fit(
        edges.iter().copied(),
        std::iter::once(0.0).chain(counts.iter().map(|&c| c as f64)),
    );
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out, &axes, x_label, "count");
    out.push_str("<g fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\">\n");
    for (k, &c) in counts.iter().enumerate() {
        let (x0, x1) = (axes.px(edges[k]), axes.px(edges[k + 1]));
        let (top, base) = (axes.py(c as f64), axes.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.1}" y="{top:.1}" width="{:.1}" height="{:.1}"/>"#,
            (x1 - x0).max(0.5),
            base - top
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_circle_per_point_plus_legend() {
        let s = scatter(
            "t",
            "x",
            "y",
            &[Series { name: "a", color: "red", points: vec![(0.0, 1.0), (1.0, 2.0)] }],
        );
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<circle").count(), 3);
    }

    #[test]
    fn histogram_bars() {
        let s = histogram("h", "x", &[0.0, 0.1, 0.2], &[3, 5]);
        assert_eq!(s.matches("<rect x=").count(), 3);
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let s = scatter("t", "x", "y", &[Series { name: "a", color: "red", points: vec![(1.0, 1.0)] }]);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
