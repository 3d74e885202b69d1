//! Deterministic SVG rendering of layouts for inspection.
//!
//! Output depends only on the inputs and the style, and the default style is
//! stable, so rendered files work as golden fixtures.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;
use crate::layout::{ElementCategory, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStyle {
    pub fill: String,
    pub opacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub text: CategoryStyle,
    pub logo: CategoryStyle,
    pub underlay: CategoryStyle,
    pub embellishment: CategoryStyle,
    pub saliency_color: String,
    /// Distance between hatch lines in output pixels.
    pub hatch_spacing: f64,
    pub stroke_width: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderStyle {
    fn default() -> Self {
        let style = |fill: &str, opacity| CategoryStyle {
            fill: fill.to_string(),
            opacity,
        };
        Self {
            text: style("#1f77b4", 0.6),
            logo: style("#d62728", 0.6),
            underlay: style("#2ca02c", 0.35),
            embellishment: style("#9467bd", 0.6),
            saliency_color: "#ff7f0e".to_string(),
            hatch_spacing: 8.0,
            stroke_width: 1.5,
            width: 400,
            height: 600,
        }
    }
}

impl RenderStyle {
    pub fn category(&self, c: ElementCategory) -> &CategoryStyle {
        match c {
            ElementCategory::Text => &self.text,
            ElementCategory::Logo => &self.logo,
            ElementCategory::Underlay => &self.underlay,
            ElementCategory::Embellishment => &self.embellishment,
        }
    }

    /// Output sized to a canvas, keeping the default style otherwise.
    pub fn for_canvas(width: u32, height: u32) -> Self {
        Self {
            width: width.max(1),
            height: height.max(1),
            ..Self::default()
        }
    }
}

fn px(b: &BBox, style: &RenderStyle) -> (f64, f64, f64, f64) {
    let (w, h) = (style.width as f64, style.height as f64);
    (b.x * w, b.y * h, b.w * w, b.h * h)
}

/// One labeled rect per element, drawn in id order with underlays first,
/// and one hatched rect per salient region.
pub fn render_svg(layout: &Layout, saliency: &[BBox], style: &RenderStyle) -> String {
    let (w, h) = (style.width.max(1), style.height.max(1));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    if !saliency.is_empty() {
        let s = style.hatch_spacing;
        let _ = writeln!(
            out,
            r#"  <defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="{s:.2}" height="{s:.2}" patternTransform="rotate(45)"><path d="M 0 0 L 0 {s:.2}" stroke="{c}" stroke-width="{sw:.2}"/></pattern></defs>"#,
            c = style.saliency_color,
            sw = style.stroke_width,
        );
    }
    for b in saliency {
        let (x, y, bw, bh) = px(b, style);
        let _ = writeln!(
            out,
            r#"  <rect class="saliency" x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{bh:.2}" fill="url(#hatch)" stroke="{c}" stroke-width="{sw:.2}"/>"#,
            c = style.saliency_color,
            sw = style.stroke_width,
        );
    }
    let mut order: Vec<_> = layout.elements.iter().collect();
    order.sort_by_key(|e| (e.category != ElementCategory::Underlay, e.id));
    for e in order {
        let (x, y, bw, bh) = px(&e.bbox, style);
        let cs = style.category(e.category);
        let _ = writeln!(
            out,
            r#"  <rect class="{cat}" x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{bh:.2}" fill="{fill}" fill-opacity="{op:.2}" stroke="{fill}" stroke-width="{sw:.2}"/>"#,
            cat = e.category,
            fill = cs.fill,
            op = cs.opacity,
            sw = style.stroke_width,
        );
        let _ = writeln!(
            out,
            r#"  <text x="{tx:.2}" y="{ty:.2}" font-family="monospace" font-size="11">{cat} {id}</text>"#,
            tx = x + 3.0,
            ty = y + 12.0,
            cat = e.category,
            id = e.id,
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::LayoutElement;

    fn layout() -> Layout {
        let el = |id, category, x, y| LayoutElement {
            id,
            category,
            bbox: BBox::new(x, y, 0.3, 0.1).unwrap(),
        };
        Layout::new(vec![
            el(0, ElementCategory::Text, 0.1, 0.1),
            el(1, ElementCategory::Underlay, 0.1, 0.4),
            el(2, ElementCategory::Logo, 0.5, 0.7),
        ])
    }

    #[test]
    fn counts_rects() {
        let sal = [BBox::new(0.6, 0.1, 0.3, 0.3).unwrap()];
        let svg = render_svg(&layout(), &sal, &RenderStyle::default());
        assert_eq!(svg.matches("<rect").count(), 4);
        assert_eq!(svg.matches("url(#hatch)").count(), 1);
        assert_eq!(svg.matches("<text").count(), 3);
    }

    #[test]
    fn no_saliency_no_hatching() {
        let svg = render_svg(&layout(), &[], &RenderStyle::default());
        assert_eq!(svg.matches("<rect").count(), 3);
        assert!(!svg.contains("hatch"));
    }

    #[test]
    fn deterministic_bytes() {
        let sal = [BBox::new(0.6, 0.1, 0.3, 0.3).unwrap()];
        let style = RenderStyle::for_canvas(513, 750);
        assert_eq!(render_svg(&layout(), &sal, &style), render_svg(&layout(), &sal, &style));
    }
}
