//! SVG drawing of boundary curves, level lines and critical points.

use std::f64::consts::TAU;
use std::fmt::Write;

use levelset_core::critical::CriticalPoint;
use levelset_core::domain::BoundaryCurve;
use levelset_core::solver::SolutionField;
use levelset_core::topology::LevelLines;
use levelset_core::Point;

const CANVAS: f64 = 600.0;
const LEGEND_WIDTH: f64 = 160.0;
const BOUNDARY_SAMPLES: usize = 720;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

struct View {
    scale: f64,
    half: f64,
}

impl View {
    fn map(&self, p: Point) -> (f64, f64) {
        (self.half + self.scale * p.x, self.half - self.scale * p.y)
    }

    fn path(&self, pts: &[Point]) -> String {
        let mut s = String::new();
        for (k, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    }
}

fn curve_points(c: &BoundaryCurve) -> Vec<Point> {
    (0..BOUNDARY_SAMPLES)
        .map(|k| c.point(TAU * k as f64 / BOUNDARY_SAMPLES as f64))
        .collect()
}

/// Renders level lines (one group per threshold, in the given order) and
/// critical-point markers whose radius grows with multiplicity.
pub fn render_svg(field: &SolutionField, levels: &[LevelLines], points: &[CriticalPoint]) -> String {
    let domain = field.domain();
    let outer = curve_points(&domain.exterior);
    let extent = outer.iter().map(|p| p.norm()).fold(0.0, f64::max) * 1.05;
    let view = View {
        scale: 0.5 * CANVAS / extent,
        half: 0.5 * CANVAS,
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = CANVAS + LEGEND_WIDTH,
        h = CANVAS
    );
    for w in levels.iter().flat_map(|l| &l.warnings) {
        let _ = writeln!(svg, "<!-- {} -->", w.replace("--", "- -"));
    }
    let _ = writeln!(svg, r#"<g id="boundaries" fill="none" stroke="black" stroke-width="1.5">"#);
    let mut curves = vec![("exterior", outer)];
    if let Some(inner) = &domain.interior {
        curves.push(("interior", curve_points(inner)));
    }
    for (name, pts) in &curves {
        let _ = writeln!(svg, r#"<polygon class="{name}" points="{}"/>"#, view.path(pts));
    }
    svg.push_str("</g>\n");

    for (k, level) in levels.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<g class="level" data-t="{:.6}" fill="none" stroke="{colour}" stroke-width="1">"#,
            level.t
        );
        for line in &level.polylines {
            let tag = if line.closed { "polygon" } else { "polyline" };
            let _ = writeln!(svg, r#"<{tag} points="{}"/>"#, view.path(&line.points));
        }
        svg.push_str("</g>\n");
    }

    let _ = writeln!(svg, r#"<g id="critical-points" fill="black">"#);
    for p in points {
        let (x, y) = view.map(p.location);
        let _ = writeln!(
            svg,
            r#"<circle class="marker" cx="{x:.3}" cy="{y:.3}" r="{:.1}" data-m="{}"/>"#,
            3.0 + 2.0 * f64::from(p.multiplicity),
            p.multiplicity
        );
    }
    svg.push_str("</g>\n");

    let _ = writeln!(svg, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
    for (k, level) in levels.iter().enumerate() {
        let y = 20.0 + 18.0 * k as f64;
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="{colour}" stroke-width="2"/><text x="{xt}" y="{yt}">t = {t:.4}</text>"#,
            x0 = CANVAS + 10.0,
            x1 = CANVAS + 34.0,
            xt = CANVAS + 40.0,
            yt = y + 4.0,
            t = level.t
        );
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}
