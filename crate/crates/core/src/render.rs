//! Deterministic SVG snapshots of a layout.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::engine::Layout;
use crate::error::RenderError;
use crate::geometry::Point;
use crate::graph::Graph;

/// Drawing options. Sizes are in output pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub node_radius: f64,
    pub edge_width: f64,
    pub node_color: String,
    pub edge_color: String,
    pub background: String,
    /// Blank border on each side, as a fraction of the image size.
    pub margin_fraction: f64,
    /// Width and height of the square image.
    pub image_size: u32,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            node_radius: 3.0,
            edge_width: 1.0,
            node_color: "#1f4e79".into(),
            edge_color: "#888888".into(),
            background: "#ffffff".into(),
            margin_fraction: 0.05,
            image_size: 1000,
        }
    }
}

fn is_hex_color(s: &str) -> bool {
    let digits = s.strip_prefix('#').unwrap_or("");
    matches!(digits.len(), 3 | 6) && digits.bytes().all(|b| b.is_ascii_hexdigit())
}

impl RenderStyle {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::Style(m.to_string()));
        if !(self.node_radius > 0.0 && self.node_radius.is_finite()) {
            return bad("node_radius must be positive");
        }
        if !(self.edge_width > 0.0 && self.edge_width.is_finite()) {
            return bad("edge_width must be positive");
        }
        if !(0.0..0.5).contains(&self.margin_fraction) {
            return bad("margin_fraction must be in [0, 0.5)");
        }
        if self.image_size == 0 {
            return bad("image_size must be positive");
        }
        for (name, c) in [
            ("node_color", &self.node_color),
            ("edge_color", &self.edge_color),
            ("background", &self.background),
        ] {
            if !is_hex_color(c) {
                return Err(RenderError::Style(format!("{name} must be a #rgb or #rrggbb color, got {c:?}")));
            }
        }
        Ok(())
    }
}

/// Fixed three-decimal formatting with negative zero folded to zero.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Uniform scale and translation fitting `positions` into the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitTransform {
    pub scale: f64,
    pub offset: Point,
}

impl FitTransform {
    pub fn fit(positions: &[Point], image_size: f64, margin_fraction: f64) -> Self {
        let center = image_size / 2.0;
        if positions.is_empty() {
            return Self {
                scale: 0.0,
                offset: Point::new(center, center),
            };
        }
        let (mut lo, mut hi) = (positions[0], positions[0]);
        for p in positions {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let mid = Point::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
        let scale = if extent > 0.0 {
            image_size * (1.0 - 2.0 * margin_fraction) / extent
        } else {
            0.0
        };
        Self {
            scale,
            offset: Point::new(center - scale * mid.x, center - scale * mid.y),
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.scale * p.x + self.offset.x, self.scale * p.y + self.offset.y)
    }
}

/// Draws edges, then nodes, each in index order.
pub fn render_svg(g: &Graph, layout: &Layout, style: &RenderStyle) -> Result<String, RenderError> {
    style.validate()?;
    if layout.len() != g.node_count() {
        return Err(RenderError::SizeMismatch {
            positions: layout.len(),
            nodes: g.node_count(),
        });
    }
    if layout.positions.iter().any(|p| !p.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    let size = style.image_size as f64;
    let fit = FitTransform::fit(&layout.positions, size, style.margin_fraction);
    let pts: Vec<Point> = layout.positions.iter().map(|&p| fit.apply(p)).collect();

    let mut out = String::new();
    let s = style.image_size;
    // Writing to a String cannot fail.
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{s}" height="{s}" fill="{}"/>"#, style.background);
    let _ = writeln!(
        out,
        r#"<g stroke="{}" stroke-width="{}">"#,
        style.edge_color,
        num(style.edge_width)
    );
    for &(u, v) in g.edges() {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(pts[u].x),
            num(pts[u].y),
            num(pts[v].x),
            num(pts[v].y)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g fill="{}">"#, style.node_color);
    let r = num(style.node_radius);
    for p in &pts {
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="{r}"/>"#, num(p.x), num(p.y));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    Ok(out)
}
