//! SVG drawings of two-objective polytopes and regions.

use std::fmt::Write;

use anyhow::{bail, Result};
use dwc_polytope::{DwcPolytope, Rational};
use num_traits::ToPrimitive;

const SIZE: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1", "#edc948", "#9c755f"];

fn side() -> f64 {
    SIZE - 2.0 * MARGIN
}

fn px(x: &Rational) -> f64 {
    MARGIN + side() * x.to_f64().unwrap_or(0.0)
}

fn py(y: &Rational) -> f64 {
    SIZE - MARGIN - side() * y.to_f64().unwrap_or(0.0)
}

/// Frontier corners from the vertical axis to the horizontal one.
fn frontier(p: &DwcPolytope) -> Vec<(f64, f64)> {
    let mut gens: Vec<&Vec<Rational>> = p.generators().iter().collect();
    gens.sort_by(|a, b| a[0].cmp(&b[0]).then(b[1].cmp(&a[1])));
    let zero = Rational::from_integer(0.into());
    let mut pts = vec![(px(&zero), py(&gens[0][1]))];
    pts.extend(gens.iter().map(|g| (px(&g[0]), py(&g[1]))));
    pts.push((px(&gens[gens.len() - 1][0]), py(&zero)));
    pts
}

fn points(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

/// Unit box with each part filled and its frontier stroked; the union of
/// the parts is the drawn set.
pub fn render(parts: &[DwcPolytope]) -> Result<String> {
    if parts.is_empty() {
        bail!("nothing to draw");
    }
    if let Some(p) = parts.iter().find(|p| p.dim() != 2) {
        bail!("SVG output needs two objectives, found {}", p.dim());
    }
    let (lo, hi) = (MARGIN, SIZE - MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let origin = (px(&Rational::from_integer(0.into())), py(&Rational::from_integer(0.into())));
    for (i, p) in parts.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let edge = frontier(p);
        let mut area = vec![origin];
        area.extend(edge.iter().copied());
        let _ =
            writeln!(s, r#"<polygon points="{}" fill="{colour}" fill-opacity="0.3" stroke="none"/>"#, points(&area));
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, points(&edge));
    }
    let _ = writeln!(s, r#"<rect x="{lo}" y="{lo}" width="{w}" height="{w}" fill="none" stroke="black"/>"#, w = side());
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="12" fill="black">"#);
    let _ = writeln!(s, r#"<text x="{lo}" y="{}" text-anchor="middle">0</text>"#, hi + 16.0);
    let _ = writeln!(s, r#"<text x="{hi}" y="{}" text-anchor="middle">1</text>"#, hi + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{lo}" text-anchor="end" dominant-baseline="middle">1</text>"#, lo - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">objective 1</text>"#, SIZE / 2.0, hi + 32.0);
    let (yx, yy) = (lo - 24.0, SIZE / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{yx}" y="{yy}" text-anchor="middle" transform="rotate(-90 {yx} {yy})">objective 2</text>"#
    );
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
