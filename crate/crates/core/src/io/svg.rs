//! SVG export of curve sets: one closed path per loop of quadratic segments.

use std::fmt::Write as _;

use crate::geometry2d::CurveSet;

/// Output frame: shape coordinates are multiplied by `scale`; `width`/`height` set the viewport.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SvgFrame {
    pub width: f64,
    pub height: f64,
    pub scale: f64,
    /// Emit `stroke-width` from curve thickness (twice the largest half-width in the loop).
    pub stroke_from_thickness: bool,
}

impl SvgFrame {
    /// Unit coordinates mapped onto an `n × n` pixel frame.
    pub fn pixels(n: f64) -> Self {
        SvgFrame {
            width: n,
            height: n,
            scale: n,
            stroke_from_thickness: false,
        }
    }
}

impl Default for SvgFrame {
    fn default() -> Self {
        SvgFrame {
            width: 1.0,
            height: 1.0,
            scale: 1.0,
            stroke_from_thickness: false,
        }
    }
}

/// Path data for one loop: `M a Q b c Q b c … Z`.
pub fn loop_path_data(curves: &[crate::geometry2d::QuadraticBezier<f64>], scale: f64) -> String {
    let mut d = String::new();
    if let Some(first) = curves.first() {
        let _ = write!(d, "M {} {}", first.a.x * scale, first.a.y * scale);
    }
    for c in curves {
        let _ = write!(
            d,
            " Q {} {} {} {}",
            c.b.x * scale,
            c.b.y * scale,
            c.c.x * scale,
            c.c.y * scale
        );
    }
    d.push_str(" Z");
    d
}

pub fn write_svg(shape: &CurveSet<f64>, frame: &SvgFrame) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = frame.width,
        h = frame.height
    );
    for lp in shape.loops() {
        let d = loop_path_data(lp.curves(), frame.scale);
        let _ = write!(out, r#"  <path d="{d}" fill="none" stroke="black""#);
        if frame.stroke_from_thickness {
            let s = lp.curves().iter().fold(0.0f64, |m, c| m.max(c.thickness));
            let _ = write!(out, r#" stroke-width="{}""#, 2.0 * s * frame.scale);
        }
        out.push_str("/>\n");
    }
    out.push_str("</svg>\n");
    out
}
