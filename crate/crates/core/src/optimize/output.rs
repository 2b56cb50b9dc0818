use std::fmt::Write as _;

use super::History;

pub const ENERGY_CSV_HEADER: &str = "iteration,energy,step,area,admm_iters";

pub fn energy_csv_row(r: &super::IterationRecord) -> String {
    format!(
        "{},{:.17e},{:.17e},{:.17e},{}",
        r.iteration, r.energy, r.step, r.area, r.admm_iterations
    )
}

/// Log-scale polyline of `energy − offset` against the iteration; points
/// with a non-positive gap are left out.
pub fn energy_svg(history: &History, offset: f64, label: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts: Vec<(f64, f64)> = history
        .records
        .iter()
        .filter(|r| r.energy - offset > 0.0)
        .map(|r| (r.iteration as f64, (r.energy - offset).log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="13">{}</text>"#,
        escape(label)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    if !pts.is_empty() {
        let x_max = (history.records.len().saturating_sub(1)).max(1) as f64;
        let y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
        let y_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
        let y_span = (y_hi - y_lo).max(1.0);
        let sx = |x: f64| pad + x / x_max * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y_lo) / y_span * (h - 2.0 * pad);
        let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            poly.join(" ")
        );
        for e in [y_lo, y_hi] {
            let _ = writeln!(
                s,
                r#"<text x="5" y="{:.2}" font-family="sans-serif" font-size="11">1e{e}</text>"#,
                sy(e) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            w - pad - 10.0,
            h - pad + 18.0,
            x_max
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
