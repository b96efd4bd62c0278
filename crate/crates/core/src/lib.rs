//! Fitting sparse parametric shapes to distance fields.
//!
//! 2D shapes are closed loops of quadratic Bézier curves; 3D shapes are unions of (rounded)
//! cuboids or a union-minus-union CSG composition. Both are fit by minimizing a surface loss and
//! a normal-alignment loss evaluated on a regular grid.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod embedding;
pub mod error;
pub mod field;
pub mod fit;
pub mod geometry2d;
pub mod geometry3d;
pub mod io;
pub mod loss;
pub mod mesh;
pub mod scalar;
pub mod template;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point2 = vector::Vec2<f64>;
pub type Point3 = vector::Vec3<f64>;
pub type Quat = vector::Quaternion<f64>;
pub type Curve = geometry2d::QuadraticBezier<f64>;
pub type Loop = geometry2d::CurveLoop<f64>;
pub type Curves = geometry2d::CurveSet<f64>;
pub type Box3 = geometry3d::Cuboid<f64>;
pub type RoundedBox3 = geometry3d::RoundedCuboid<f64>;
pub type Primitives = geometry3d::PrimitiveSet<f64>;
pub type Csg = geometry3d::CsgShape<f64>;
pub type Grid = field::GridSpec<f64>;
pub type Field = field::ScalarField<f64>;
pub type Polyline = field::Outline<f64>;
pub type Mesh = mesh::TriangleMesh<f64>;

pub type CurveF32 = geometry2d::QuadraticBezier<f32>;
pub type FieldF32 = field::ScalarField<f32>;
