//! CSV and SVG renderings of density profiles.

use std::fmt::Write;

use super::lz::DensityPoint;

/// `n,khat_over_n` rows.
pub fn profile_csv(points: &[DensityPoint]) -> String {
    let mut out = String::from("n,khat_over_n\n");
    for p in points {
        writeln!(out, "{},{}", p.n, p.ratio).unwrap();
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of `K̂/n` against `log₂ n`, one polyline per series.
pub fn profile_svg(title: &str, series: &[(String, Vec<DensityPoint>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 1.0f64);
    for p in pts {
        let lx = (p.n as f64).log2();
        x0 = x0.min(lx);
        x1 = x1.max(lx);
        y1 = y1.max(p.ratio);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1.0 {
        x1 = x0 + 1.0;
    }
    let sx = |lx: f64| MARGIN + (lx - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |r: f64| H - MARGIN - r / y1 * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, escape(title)).unwrap();
    let (left, right, top, bottom) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    writeln!(s, r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#).unwrap();
    for i in 0..=4 {
        let r = y1 * i as f64 / 4.0;
        let y = sy(r);
        writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{right}" y2="{y:.1}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{r:.2}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    let (t0, t1) = (x0.ceil() as i64, x1.floor() as i64);
    let step = ((t1 - t0) / 8).max(1);
    for t in (t0..=t1).step_by(step as usize) {
        let x = sx(t as f64);
        writeln!(s, r#"<text x="{x:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">2^{t}</text>"#, bottom + 16.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">prefix length n</text>"#, W / 2.0, H - 12.0).unwrap();
    writeln!(s, r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">K̂/n</text>"#, H / 2.0, H / 2.0).unwrap();

    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> =
            points.iter().map(|p| format!("{:.1},{:.1}", sx((p.n as f64).log2()), sy(p.ratio))).collect();
        if !path.is_empty() {
            writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, path.join(" ")).unwrap();
            for xy in &path {
                let (x, y) = xy.split_once(',').unwrap();
                writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#).unwrap();
            }
        }
        let ly = top + 16.0 * i as f64;
        writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, right - 150.0, right - 130.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#, right - 124.0, ly + 4.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts() -> Vec<DensityPoint> {
        [(16, 0.5), (256, 0.25), (4096, 0.125)].map(|(n, r)| DensityPoint { n, khat: (r * n as f64) as u64, ratio: r }).to_vec()
    }

    #[test]
    fn csv_rows() {
        let c = profile_csv(&pts());
        assert_eq!(c.lines().next(), Some("n,khat_over_n"));
        assert_eq!(c.lines().nth(2), Some("256,0.25"));
        assert_eq!(profile_csv(&[]), "n,khat_over_n\n");
    }

    #[test]
    fn svg_shape() {
        let s = profile_svg("a<b", &[("1/2".into(), pts()), ("T".into(), Vec::new())]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(s.contains("a&lt;b"));
        assert!(profile_svg("empty", &[]).contains("</svg>"));
    }
}
