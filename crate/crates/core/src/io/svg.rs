//! Minimal SVG line chart for expected vs modeled daily cases.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 360.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 44.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn points(series: &[f64], y_max: f64) -> String {
    let n = series.len().max(2) - 1;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = LEFT + pw * i as f64 / n as f64;
            let y = TOP + ph * (1.0 - v / y_max);
            format!("{x:.1},{y:.1}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Chart of two daily series with a legend.
pub fn line_chart(title: &str, expected: &[f64], modeled: &[f64]) -> String {
    let y_max = expected
        .iter()
        .chain(modeled)
        .copied()
        .fold(0.0, f64::max)
        .max(1.0)
        * 1.1;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="22" font-size="14">{}</text>"#, escape(title));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=4 {
        let v = y_max * f64::from(k) / 4.0;
        let y = y1 - (y1 - y0) * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            x0 - 6.0,
            y + 4.0,
            v
        );
    }
    let days = expected.len().max(modeled.len());
    let _ = writeln!(s, r#"<text x="{x0}" y="{:.1}">day 0</text>"#, y1 + 18.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{:.1}" text-anchor="end">day {}</text>"#,
        y1 + 18.0,
        days.saturating_sub(1)
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        points(expected, y_max)
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#ff7f0e" stroke-width="2" points="{}"/>"##,
        points(modeled, y_max)
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="22" fill="#1f77b4">expected</text><text x="{:.1}" y="22" fill="#ff7f0e">modeled</text>"##,
        W - 170.0,
        W - 90.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_two_series() {
        let svg = line_chart("County <1>", &[1.0, 2.0, 3.0], &[1.0, 1.0, 4.0]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("County &lt;1&gt;"));
    }

    #[test]
    fn empty_series() {
        let svg = line_chart("x", &[], &[]);
        assert!(svg.ends_with("</svg>\n"));
    }
}
