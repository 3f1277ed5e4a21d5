use std::fmt::Write as _;
use std::path::Path;

use super::write_atomic;
use crate::error::Result;
use crate::frontier::DivergenceCurve;

/// `lambda,x,y` rows in frontier order.
pub fn curve_to_csv(curve: &DivergenceCurve) -> String {
    let mut out = String::from("lambda,x,y\n");
    for pt in &curve.points {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", pt.lambda, pt.x, pt.y).expect("string write");
    }
    out
}

pub fn write_curve_csv(path: &Path, curve: &DivergenceCurve) -> Result<()> {
    write_atomic(path, curve_to_csv(curve).as_bytes())
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

/// Minimal SVG plot of the frontier in the unit square.
pub fn curve_to_svg(curve: &DivergenceCurve, title: &str) -> String {
    let span = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x * span;
    let py = |y: f64| SIZE - MARGIN - y * span;
    let path: Vec<String> = curve
        .points
        .iter()
        .map(|pt| format!("{:.3},{:.3}", px(pt.x), py(pt.y)))
        .collect();
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="#999"/>"##
    )
    .unwrap();
    writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        path.join(" ")
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        MARGIN / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">exp(-c KL(Q|R))</text>"#,
        SIZE / 2.0,
        SIZE - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">exp(-c KL(P|R))</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

pub fn write_curve_svg(path: &Path, curve: &DivergenceCurve, title: &str) -> Result<()> {
    write_atomic(path, curve_to_svg(curve, title).as_bytes())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
