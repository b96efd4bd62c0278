//! Wavefront OBJ export of cuboid primitives and a minimal triangle reader.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry3d::{Cuboid, RoundedCuboid};
use crate::mesh::TriangleMesh;
use crate::scalar::Real;
use crate::vector::vec3;

/// Outward-wound faces over the corner order of [`Cuboid::corners`].
const BOX_TRIANGLES: [[usize; 3]; 12] = [
    [0, 4, 6],
    [0, 6, 2],
    [1, 3, 7],
    [1, 7, 5],
    [0, 1, 5],
    [0, 5, 4],
    [2, 6, 7],
    [2, 7, 3],
    [0, 2, 3],
    [0, 3, 1],
    [4, 5, 7],
    [4, 7, 6],
];

pub fn cuboid_mesh<T: Real>(c: &Cuboid<T>) -> TriangleMesh<T> {
    TriangleMesh {
        vertices: c.corners().to_vec(),
        triangles: BOX_TRIANGLES.to_vec(),
    }
}

/// One object per primitive; rounded parts are written sharp with their radius in a comment.
///
/// `groups` pairs a group name with its primitives (e.g. `positive` / `negative` for CSG).
pub fn write_obj(groups: &[(&str, &[RoundedCuboid<f64>])]) -> String {
    let mut out = String::new();
    let mut base = 1;
    for (name, prims) in groups {
        let _ = writeln!(out, "g {name}");
        for (i, p) in prims.iter().enumerate() {
            let _ = writeln!(out, "o {name}_{i}");
            if p.radius != 0.0 {
                let _ = writeln!(out, "# radius {}", p.radius);
            }
            for v in p.cuboid.corners() {
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
            for [a, b, c] in BOX_TRIANGLES {
                let _ = writeln!(out, "f {} {} {}", a + base, b + base, c + base);
            }
            base += 8;
        }
    }
    out
}

/// Reads `v` and `f` records; polygons are fan-triangulated, `v/vt/vn` forms accepted.
pub fn read_obj(text: &str) -> Result<TriangleMesh<f64>> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len();
        let body = line.split('#').next().unwrap_or("").trim();
        let mut tokens = body.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| Error::parse(at, "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(at, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(vec3(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(at, format!("bad face index {tok:?}")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else {
                        vertices.len() as i64 + raw
                    };
                    if raw == 0 || resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(Error::parse(at, format!("face index {raw} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(at, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    Ok(TriangleMesh { vertices, triangles })
}
