//! Signed distances for oriented cuboids, rounded cuboids and their CSG compositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::{vec3, Quaternion, Vec3};

/// Box with half-extents `b`, centered at `t`, rotated by the unit quaternion `q`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid<T> {
    pub half_extents: Vec3<T>,
    pub translation: Vec3<T>,
    pub rotation: Quaternion<T>,
}

/// Partial derivatives of a cuboid SDF value at one point.
///
/// `rotation` is the gradient with respect to the unit quaternion components `(w, x, y, z)`,
/// treated as free variables of the rotation formula.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CuboidSdfGrad<T> {
    pub value: T,
    pub half_extents: Vec3<T>,
    pub translation: Vec3<T>,
    pub rotation: [T; 4],
}

impl<T: Real> Cuboid<T> {
    /// Validates extents and renormalizes the rotation.
    pub fn new(half_extents: Vec3<T>, translation: Vec3<T>, rotation: Quaternion<T>) -> Result<Self> {
        if !(half_extents.x > T::zero() && half_extents.y > T::zero() && half_extents.z > T::zero())
            || !half_extents.is_finite()
        {
            return Err(Error::invalid("cuboid half-extents must be finite and positive"));
        }
        if !translation.is_finite() {
            return Err(Error::invalid("cuboid translation must be finite"));
        }
        let n = rotation.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::invalid("cuboid rotation must be a nonzero finite quaternion"));
        }
        Ok(Cuboid {
            half_extents,
            translation,
            rotation: rotation.normalized(),
        })
    }

    pub fn axis_aligned(half_extents: Vec3<T>, translation: Vec3<T>) -> Result<Self> {
        Self::new(half_extents, translation, Quaternion::identity())
    }

    /// `p′ = q⁻¹ (p − t) q`.
    #[inline]
    pub fn to_local(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.inverse_rotate(p - self.translation)
    }

    #[inline]
    pub fn to_world(&self, local: Vec3<T>) -> Vec3<T> {
        self.rotation.rotate(local) + self.translation
    }

    /// Negative inside, zero on the surface, positive outside.
    #[inline]
    pub fn sdf(&self, p: Vec3<T>) -> T {
        let d = self.to_local(p).abs() - self.half_extents;
        d.max_scalar(T::zero()).norm() + d.max_elem().min(T::zero())
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        let d = self.to_local(p).abs() - self.half_extents;
        d.max_elem() <= T::zero()
    }

    pub fn volume(&self) -> T {
        T::lit(8.0) * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// The eight corners, ordered by the bit pattern `(x, y, z)` of the sign choice.
    pub fn corners(&self) -> [Vec3<T>; 8] {
        let b = self.half_extents;
        let mut out = [Vec3::zero(); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -b.x } else { b.x };
            let sy = if i & 2 == 0 { -b.y } else { b.y };
            let sz = if i & 4 == 0 { -b.z } else { b.z };
            *slot = self.to_world(vec3(sx, sy, sz));
        }
        out
    }

    /// SDF value together with its derivatives with respect to `b`, `t` and the rotation.
    pub fn sdf_with_grad(&self, p: Vec3<T>) -> CuboidSdfGrad<T> {
        let zero = T::zero();
        let two = T::lit(2.0);
        let v = p - self.translation;
        let local = self.to_local(p);
        let d = local.abs() - self.half_extents;
        let outside = d.max_scalar(zero);
        let out_norm = outside.norm();

        let (value, e) = if out_norm > zero {
            (out_norm, outside / out_norm)
        } else {
            let m = d.max_elem();
            let e = if d.x == m {
                vec3(T::one(), zero, zero)
            } else if d.y == m {
                vec3(zero, T::one(), zero)
            } else {
                vec3(zero, zero, T::one())
            };
            (m, e)
        };

        let sign = |x: T| if x < zero { -T::one() } else { T::one() };
        let g_local = vec3(e.x * sign(local.x), e.y * sign(local.y), e.z * sign(local.z));

        // local = v − 2w(u×v) + 2u×(u×v) for the unit quaternion (w, u).
        let q = self.rotation;
        let w = q.w;
        let u = q.vector();
        let uxv = u.cross(v);
        let d_w = g_local.dot(uxv * (-two));
        let axes = [
            vec3(T::one(), zero, zero),
            vec3(zero, T::one(), zero),
            vec3(zero, zero, T::one()),
        ];
        let mut d_u = [zero; 3];
        for (j, ej) in axes.iter().enumerate() {
            let ejxv = ej.cross(v);
            let dj = ejxv * (-two * w) + (ej.cross(uxv) + u.cross(ejxv)) * two;
            d_u[j] = g_local.dot(dj);
        }

        CuboidSdfGrad {
            value,
            half_extents: -e,
            translation: -q.rotate(g_local),
            rotation: [d_w, d_u[0], d_u[1], d_u[2]],
        }
    }
}

/// Cuboid whose surface is offset outward by `radius`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedCuboid<T> {
    pub cuboid: Cuboid<T>,
    pub radius: T,
}

impl<T: Real> RoundedCuboid<T> {
    pub fn new(cuboid: Cuboid<T>, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(Error::invalid("rounding radius must be finite and >= 0"));
        }
        Ok(RoundedCuboid { cuboid, radius })
    }

    pub fn sharp(cuboid: Cuboid<T>) -> Self {
        RoundedCuboid {
            cuboid,
            radius: T::zero(),
        }
    }

    #[inline]
    pub fn sdf(&self, p: Vec3<T>) -> T {
        self.cuboid.sdf(p) - self.radius
    }
}

/// `min_i d_Ci(p)` over a set of primitives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSet<T> {
    pub primitives: Vec<RoundedCuboid<T>>,
}

impl<T: Real> PrimitiveSet<T> {
    pub fn new(primitives: Vec<RoundedCuboid<T>>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        Ok(PrimitiveSet { primitives })
    }

    pub fn sdf(&self, p: Vec3<T>) -> T {
        union_sdf(&self.primitives, p)
    }
}

/// Union of positive parts minus the union of negative parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsgShape<T> {
    pub positive: Vec<RoundedCuboid<T>>,
    pub negative: Vec<RoundedCuboid<T>>,
}

impl<T: Real> CsgShape<T> {
    pub fn new(positive: Vec<RoundedCuboid<T>>, negative: Vec<RoundedCuboid<T>>) -> Result<Self> {
        if positive.is_empty() {
            return Err(Error::invalid("CSG shape needs at least one positive part"));
        }
        Ok(CsgShape { positive, negative })
    }

    pub fn sdf(&self, p: Vec3<T>) -> T {
        let union = union_sdf(&self.positive, p);
        self.negative
            .iter()
            .fold(union, |acc, neg| acc.max(-neg.sdf(p)))
    }
}

fn union_sdf<T: Real>(parts: &[RoundedCuboid<T>], p: Vec3<T>) -> T {
    parts
        .iter()
        .fold(T::infinity(), |acc, part| acc.min(part.sdf(p)))
}

pub fn cuboid_sdf<T: Real>(c: &Cuboid<T>, p: Vec3<T>) -> T {
    c.sdf(p)
}

pub fn rounded_cuboid_sdf<T: Real>(rc: &RoundedCuboid<T>, p: Vec3<T>) -> T {
    rc.sdf(p)
}

pub fn csg_sdf<T: Real>(s: &CsgShape<T>, p: Vec3<T>) -> T {
    s.sdf(p)
}
