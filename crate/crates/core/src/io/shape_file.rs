//! JSON files for fitted shapes and polygon outlines.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Outline;
use crate::geometry2d::CurveSet;
use crate::geometry3d::{CsgShape, Cuboid, PrimitiveSet, RoundedCuboid};
use crate::template::{unpack, Template};
use crate::vector::{vec2, Vec2};

pub const SHAPE_FORMAT: &str = "sdfit-shape";
pub const SHAPE_VERSION: u32 = 1;

/// A fitted shape as written by the fitters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeBody {
    /// Flat parameter vector over a named template (thickness appended when present).
    Curves { class_label: String, params: Vec<f64> },
    Primitives { primitives: Vec<RoundedCuboid<f64>> },
    Csg { positive: Vec<RoundedCuboid<f64>>, negative: Vec<RoundedCuboid<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeFile {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub body: ShapeBody,
}

impl ShapeFile {
    pub fn new(body: ShapeBody) -> Self {
        ShapeFile {
            format: SHAPE_FORMAT.into(),
            version: SHAPE_VERSION,
            body,
        }
    }

    pub fn curves(class_label: impl Into<String>, params: Vec<f64>) -> Self {
        Self::new(ShapeBody::Curves {
            class_label: class_label.into(),
            params,
        })
    }

    pub fn primitives(set: &PrimitiveSet<f64>) -> Self {
        Self::new(ShapeBody::Primitives {
            primitives: set.primitives.clone(),
        })
    }

    pub fn csg(shape: &CsgShape<f64>) -> Self {
        Self::new(ShapeBody::Csg {
            positive: shape.positive.clone(),
            negative: shape.negative.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("shape serialization")
    }

    /// Parses and re-validates every primitive (unit rotation, positive extents).
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ShapeFile = serde_json::from_str(text).map_err(|e| Error::json("shape file", e))?;
        if file.format != SHAPE_FORMAT || file.version != SHAPE_VERSION {
            return Err(Error::invalid(format!(
                "unsupported shape file {:?} version {}",
                file.format, file.version
            )));
        }
        let check = |prims: &[RoundedCuboid<f64>]| -> Result<()> {
            for p in prims {
                let c = Cuboid::new(p.cuboid.half_extents, p.cuboid.translation, p.cuboid.rotation)?;
                if (c.rotation.norm() - p.cuboid.rotation.norm()).abs() > 1e-9 {
                    return Err(Error::invalid("stored rotation is not a unit quaternion"));
                }
                RoundedCuboid::new(c, p.radius)?;
            }
            Ok(())
        };
        match &file.body {
            ShapeBody::Curves { params, .. } => {
                if params.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("curve parameters must be finite"));
                }
            }
            ShapeBody::Primitives { primitives } => {
                if primitives.is_empty() {
                    return Err(Error::EmptyGeometry);
                }
                check(primitives)?
            }
            ShapeBody::Csg { positive, negative } => {
                CsgShape::new(positive.clone(), negative.clone())?;
                check(positive)?;
                check(negative)?;
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The curve set for a `curves` body, rebuilt against `template`.
    pub fn to_curve_set(&self, template: &Template) -> Result<CurveSet<f64>> {
        match &self.body {
            ShapeBody::Curves { params, .. } => unpack(template, params),
            _ => Err(Error::invalid("shape file does not hold curves")),
        }
    }
}

/// Closed polygon loops in unit glyph coordinates (y down).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlineFile {
    pub loops: Vec<Vec<[f64; 2]>>,
}

impl OutlineFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: OutlineFile = serde_json::from_str(text).map_err(|e| Error::json("outline file", e))?;
        if f.loops.iter().all(|l| l.len() < 2) {
            return Err(Error::EmptyGeometry);
        }
        if f.loops.iter().flatten().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::invalid("outline coordinates must be finite"));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outline serialization")
    }

    pub fn point_loops(&self) -> Vec<Vec<Vec2<f64>>> {
        self.loops
            .iter()
            .map(|l| l.iter().map(|&[x, y]| vec2(x, y)).collect())
            .collect()
    }

    pub fn to_outline(&self) -> Outline<f64> {
        Outline::from_loops(&self.point_loops())
    }
}
