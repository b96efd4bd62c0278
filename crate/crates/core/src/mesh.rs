//! Signed distance to a triangle soup: exact point-triangle distance, sign by ray parity.

use crate::field::{evaluate_3d, GridSpec, ScalarField};
use crate::scalar::Real;
use crate::vector::{vec3, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn triangle(&self, i: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unsigned distance to the closest triangle.
    pub fn distance(&self, p: Vec3<T>) -> T {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                (p - closest_point_on_triangle(p, a, b, c)).norm()
            })
            .fold(T::infinity(), T::min)
    }

    /// Odd number of crossings along a fixed skew ray means inside.
    pub fn contains(&self, p: Vec3<T>) -> bool {
        // Irrational-ish direction avoids grazing edges of axis-aligned meshes.
        let dir = vec3(T::lit(0.5773), T::lit(0.6181), T::lit(0.5331));
        let mut hits = 0usize;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(i);
            if ray_hits_triangle(p, dir, a, b, c) {
                hits += 1;
            }
        }
        hits % 2 == 1
    }

    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        let d = self.distance(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }
}

/// Signed distance field of a closed triangle mesh sampled at cell centers.
pub fn mesh_distance_field<T: Real>(mesh: &TriangleMesh<T>, grid: &GridSpec<T>) -> ScalarField<T> {
    evaluate_3d(grid, |p| mesh.signed_distance(p))
}

/// Closest point on triangle `abc` (Voronoi-region walk).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore test for the half-line `origin + s·dir`, `s > 0`.
fn ray_hits_triangle<T: Real>(origin: Vec3<T>, dir: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let pv = dir.cross(e2);
    let det = e1.dot(pv);
    if det.abs() < T::epsilon() {
        return false;
    }
    let inv = T::one() / det;
    let tv = origin - a;
    let u = tv.dot(pv) * inv;
    if u < T::zero() || u > T::one() {
        return false;
    }
    let qv = tv.cross(e1);
    let v = dir.dot(qv) * inv;
    if v < T::zero() || u + v > T::one() {
        return false;
    }
    e2.dot(qv) * inv > T::zero()
}
