//! Per-class initial control points with loop connectivity, and the flat parameter layout.
//!
//! A loop of `n` curves owns `2n` consecutive points stored interleaved as
//! `e₀, m₀, e₁, m₁, …` (endpoint, control); curve `j` is `(e_j, m_j, e_{(j+1) mod n})`.
//! The flat parameter vector is `[x₀, y₀, x₁, y₁, …]` over all points, optionally followed by
//! one thickness per curve.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry2d::{CurveLoop, CurveSet, QuadraticBezier};
use crate::vector::{vec2, Vec2};

/// Curves in the first loop of every letter and simple template.
pub const OUTER_LOOP_CURVES: usize = 15;
/// Curves in each additional loop.
pub const INNER_LOOP_CURVES: usize = 4;

pub const TEMPLATE_FORMAT: &str = "sdfit-templates";
pub const TEMPLATE_VERSION: u32 = 1;

/// Environment variable naming a template data file that overrides the built-in set.
pub const TEMPLATE_PATH_ENV: &str = "SDFIT_TEMPLATES";

const BUILTIN_TEMPLATES: &str = include_str!("../data/templates.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub class_label: String,
    /// Curve count per loop.
    pub loops: Vec<usize>,
    pub points: Vec<Vec2<f64>>,
    /// `(start, control, end)` point indices per curve.
    pub connectivity: Vec<[usize; 3]>,
}

impl Template {
    /// Builds a template from interleaved per-loop point lists.
    pub fn from_loops(class_label: impl Into<String>, loops: Vec<Vec<Vec2<f64>>>) -> Result<Self> {
        let mut sizes = Vec::with_capacity(loops.len());
        let mut points = Vec::new();
        let mut connectivity = Vec::new();
        if loops.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        for lp in &loops {
            if lp.len() % 2 != 0 || lp.len() < 4 {
                return Err(Error::invalid(format!(
                    "a loop needs an even number (>= 4) of interleaved points, got {}",
                    lp.len()
                )));
            }
            if lp.iter().any(|p| !p.is_finite()) {
                return Err(Error::invalid("template points must be finite"));
            }
            let n = lp.len() / 2;
            let base = points.len();
            for j in 0..n {
                connectivity.push([base + 2 * j, base + 2 * j + 1, base + (2 * j + 2) % (2 * n)]);
            }
            sizes.push(n);
            points.extend_from_slice(lp);
        }
        Ok(Template {
            class_label: class_label.into(),
            loops: sizes,
            points,
            connectivity,
        })
    }

    pub fn curve_count(&self) -> usize {
        self.connectivity.len()
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Flat vector length, with or without per-curve thickness.
    pub fn vector_len(&self, with_thickness: bool) -> usize {
        2 * self.points.len() + if with_thickness { self.curve_count() } else { 0 }
    }

    /// Template point coordinates as a flat vector.
    pub fn params(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Loop closure: every loop's index chain is cyclic.
    pub fn is_closed(&self) -> bool {
        let mut curve = 0;
        for &n in &self.loops {
            for j in 0..n {
                let end = self.connectivity[curve + j][2];
                let next_start = self.connectivity[curve + (j + 1) % n][0];
                if end != next_start {
                    return false;
                }
            }
            curve += n;
        }
        curve == self.connectivity.len()
    }

    /// Letter scheme: first loop of 15 curves, each additional loop of 4.
    pub fn follows_letter_scheme(&self) -> bool {
        !self.loops.is_empty()
            && self.loops[0] == OUTER_LOOP_CURVES
            && self.loops[1..].iter().all(|&n| n == INNER_LOOP_CURVES)
    }

    pub fn to_curve_set(&self) -> CurveSet<f64> {
        unpack(self, &self.params()).expect("template params always unpack")
    }
}

/// Default simple-template geometry.
const SIMPLE_CENTER: (f64, f64) = (0.5, 0.5);
const SIMPLE_OUTER_RADIUS: f64 = 0.35;
const SIMPLE_INNER_RADIUS: f64 = 0.08;
const SIMPLE_INNER_SPREAD: f64 = 0.3;

fn circle_loop(center: Vec2<f64>, radius: f64, curves: usize) -> Vec<Vec2<f64>> {
    let mut pts = Vec::with_capacity(2 * curves);
    let step = std::f64::consts::TAU / curves as f64;
    for j in 0..curves {
        let th = step * j as f64;
        let mid = th + 0.5 * step;
        pts.push(center + vec2(th.cos(), th.sin()) * radius);
        pts.push(center + vec2(mid.cos(), mid.sin()) * radius);
    }
    pts
}

/// Topology-only template with 1, 2 or 3 loops.
///
/// The outer loop is 15 curves on a circle of radius 0.35 around (0.5, 0.5); inner loops are
/// 4-curve circles of radius 0.08 stacked on the vertical midline. Control points sit on the
/// circle at the mid-angle of each arc.
pub fn make_simple_template(loop_count: usize) -> Result<Template> {
    if !(1..=3).contains(&loop_count) {
        return Err(Error::invalid(format!("loop count must be 1, 2 or 3, got {loop_count}")));
    }
    let center = vec2(SIMPLE_CENTER.0, SIMPLE_CENTER.1);
    let mut loops = vec![circle_loop(center, SIMPLE_OUTER_RADIUS, OUTER_LOOP_CURVES)];
    let inner = loop_count - 1;
    for i in 0..inner {
        let frac = (i + 1) as f64 / (inner + 1) as f64 - 0.5;
        let c = vec2(center.x, center.y + SIMPLE_INNER_SPREAD * frac);
        loops.push(circle_loop(c, SIMPLE_INNER_RADIUS, INNER_LOOP_CURVES));
    }
    Template::from_loops(format!("simple{loop_count}"), loops)
}

#[derive(Debug, Deserialize, Serialize)]
struct TemplateFile {
    format: String,
    version: u32,
    templates: Vec<TemplateEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct TemplateEntry {
    label: String,
    loops: Vec<Vec<[f64; 2]>>,
}

/// Named templates: letter templates from data plus the three simple templates.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateLibrary {
    templates: BTreeMap<String, Template>,
}

impl TemplateLibrary {
    /// The shipped letter set.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TEMPLATES).expect("built-in template data is valid")
    }

    /// Template file named by `SDFIT_TEMPLATES`, else the built-in set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(TEMPLATE_PATH_ENV) {
            Some(path) => Self::load(Path::new(&path)),
            None => Ok(Self::builtin()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TemplateFile = serde_json::from_str(text).map_err(|e| Error::json("template file", e))?;
        if file.format != TEMPLATE_FORMAT {
            return Err(Error::invalid(format!("not a template file (format {:?})", file.format)));
        }
        if file.version != TEMPLATE_VERSION {
            return Err(Error::invalid(format!("unsupported template file version {}", file.version)));
        }
        let mut templates = BTreeMap::new();
        for entry in file.templates {
            let loops = entry
                .loops
                .iter()
                .map(|lp| lp.iter().map(|&[x, y]| vec2(x, y)).collect())
                .collect();
            let t = Template::from_loops(entry.label.clone(), loops)?;
            if !t.follows_letter_scheme() {
                return Err(Error::invalid(format!(
                    "template {:?} has loop sizes {:?}; expected 15 then 4 per extra loop",
                    entry.label, t.loops
                )));
            }
            if templates.insert(entry.label.clone(), t).is_some() {
                return Err(Error::invalid(format!("duplicate template {:?}", entry.label)));
            }
        }
        for n in 1..=3 {
            let t = make_simple_template(n)?;
            templates.entry(t.class_label.clone()).or_insert(t);
        }
        Ok(TemplateLibrary { templates })
    }

    pub fn get(&self, label: &str) -> Result<&Template> {
        self.templates
            .get(label)
            .ok_or_else(|| Error::UnknownClass(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.templates.contains_key(label)
    }

    pub fn to_json(&self) -> String {
        let file = TemplateFile {
            format: TEMPLATE_FORMAT.into(),
            version: TEMPLATE_VERSION,
            templates: self
                .templates
                .values()
                .filter(|t| !t.class_label.starts_with("simple"))
                .map(|t| {
                    let mut loops = Vec::new();
                    let mut start = 0;
                    for &n in &t.loops {
                        loops.push(t.points[start..start + 2 * n].iter().map(|p| [p.x, p.y]).collect());
                        start += 2 * n;
                    }
                    TemplateEntry {
                        label: t.class_label.clone(),
                        loops,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("template serialization")
    }
}

/// Letter template from a library (the shipped data unless overridden).
pub fn make_letter_template(letter: &str, library: &TemplateLibrary) -> Result<Template> {
    library.get(letter).cloned()
}

/// Flattens a curve set into `[x, y]` per loop point (endpoint, control interleaved), then
/// optionally one thickness per curve.
pub fn pack(shape: &CurveSet<f64>, with_thickness: bool) -> Vec<f64> {
    let mut out = Vec::new();
    for lp in shape.loops() {
        for c in lp.curves() {
            out.extend_from_slice(&[c.a.x, c.a.y, c.b.x, c.b.y]);
        }
    }
    if with_thickness {
        out.extend(shape.curves().map(|c| c.thickness));
    }
    out
}

/// Rebuilds the curve set; shared endpoints come from one storage slot so loops close exactly.
pub fn unpack(template: &Template, vec: &[f64]) -> Result<CurveSet<f64>> {
    let base = template.vector_len(false);
    let with_thickness = match vec.len() {
        n if n == base => false,
        n if n == template.vector_len(true) => true,
        n => {
            return Err(Error::LengthMismatch {
                expected: base,
                actual: n,
            })
        }
    };
    let point = |i: usize| vec2(vec[2 * i], vec[2 * i + 1]);
    let mut loops = Vec::with_capacity(template.loops.len());
    let mut curve = 0;
    for &n in &template.loops {
        let mut curves = Vec::with_capacity(n);
        for _ in 0..n {
            let [s, m, e] = template.connectivity[curve];
            let thickness = if with_thickness { vec[base + curve] } else { 0.0 };
            curves.push(QuadraticBezier::new(point(s), point(m), point(e), thickness)?);
            curve += 1;
        }
        loops.push(CurveLoop::new(curves)?);
    }
    CurveSet::new(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_template_sizes() {
        let t1 = make_simple_template(1).unwrap();
        assert_eq!(t1.curve_count(), 15);
        assert_eq!(t1.point_count(), 30);
        assert_eq!(t1.vector_len(false), 60);
        assert_eq!(t1.vector_len(true), 75);
        let t3 = make_simple_template(3).unwrap();
        assert_eq!(t3.curve_count(), 23);
        assert!(t3.is_closed() && t3.follows_letter_scheme());
        assert!(make_simple_template(0).is_err());
        assert!(make_simple_template(4).is_err());
    }

    #[test]
    fn builtin_letters_have_expected_topology() {
        let lib = TemplateLibrary::builtin();
        for letter in ["C", "A", "B"] {
            let t = make_letter_template(letter, &lib).unwrap();
            assert!(t.is_closed());
            for p in &t.points {
                assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
            }
        }
        assert_eq!(lib.get("C").unwrap().loops, vec![15]);
        assert_eq!(lib.get("A").unwrap().curve_count(), 19);
        assert_eq!(lib.get("B").unwrap().curve_count(), 23);
        assert!(matches!(make_letter_template("?", &lib), Err(Error::UnknownClass(_))));
        let letters = lib.labels().filter(|l| l.len() == 1).count();
        assert_eq!(letters, 26);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let t = make_simple_template(2).unwrap();
        let set = t.to_curve_set();
        let v = pack(&set, false);
        assert_eq!(v, t.params());
        assert_eq!(unpack(&t, &v).unwrap(), set);
        let mut vt = pack(&set, true);
        vt.iter_mut().skip(t.vector_len(false)).for_each(|s| *s = 0.01);
        assert_eq!(pack(&unpack(&t, &vt).unwrap(), true), vt);
        assert!(matches!(unpack(&t, &v[1..]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn moving_a_shared_endpoint_moves_two_curves() {
        let t = make_simple_template(1).unwrap();
        let mut v = t.params();
        let before = unpack(&t, &v).unwrap();
        // Point 4 is endpoint e₂: end of curve 1, start of curve 2.
        v[8] += 0.01;
        let after = unpack(&t, &v).unwrap();
        let changed: Vec<usize> = before
            .curves()
            .zip(after.curves())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(changed, vec![1, 2]);
    }

    #[test]
    fn library_json_round_trip() {
        let lib = TemplateLibrary::builtin();
        let again = TemplateLibrary::from_json(&lib.to_json()).unwrap();
        assert_eq!(lib, again);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(TemplateLibrary::from_json("{}").is_err());
        let wrong = r#"{"format":"sdfit-templates","version":9,"templates":[]}"#;
        assert!(TemplateLibrary::from_json(wrong).is_err());
        let bad_sizes = r#"{"format":"sdfit-templates","version":1,"templates":[
            {"label":"X","loops":[[[0,0],[0.5,0],[1,0],[0.5,0.5]]]}]}"#;
        assert!(TemplateLibrary::from_json(bad_sizes).is_err());
    }
}
