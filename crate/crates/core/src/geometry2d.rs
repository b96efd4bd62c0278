//! Exact distance to quadratic Bézier curves and unions of thickened curves.
//!
//! The closest point on `γ(t) = (1−t)²a + 2(1−t)t b + t²c` to a query `p` is a root of
//!
//! ```text
//! ⟨B,B⟩t³ + 3⟨A,B⟩t² + (2⟨A,A⟩ + ⟨B,a−p⟩)t + ⟨A,a−p⟩ = 0,   A = b − a,  B = c − 2b + a
//! ```
//!
//! solved here in closed form (Cardano / trigonometric), polished by a Newton step and
//! compared against the endpoints `t = 0` and `t = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vec2;

/// `‖B‖² < DEGENERATE_RATIO · scale²` switches to the segment branch.
const DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBezier<T> {
    pub a: Vec2<T>,
    pub b: Vec2<T>,
    pub c: Vec2<T>,
    /// Stroke half-width in field units.
    pub thickness: T,
}

/// Closest point on a single curve.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ClosestPoint<T> {
    pub t: T,
    pub point: Vec2<T>,
    pub distance: T,
}

impl<T: Real> QuadraticBezier<T> {
    pub fn new(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, thickness: T) -> Result<Self> {
        let curve = QuadraticBezier { a, b, c, thickness };
        curve.validate()?;
        Ok(curve)
    }

    /// Zero-thickness curve; panics on non-finite input.
    pub fn from_points(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> Self {
        Self::new(a, b, c, T::zero()).expect("finite control points")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::invalid("curve control points must be finite"));
        }
        if !(self.thickness >= T::zero()) || !self.thickness.is_finite() {
            return Err(Error::invalid("curve thickness must be finite and >= 0"));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: T) -> Vec2<T> {
        let s = T::one() - t;
        let two = T::lit(2.0);
        self.a * (s * s) + self.b * (two * s * t) + self.c * (t * t)
    }

    #[inline]
    pub fn derivative(&self, t: T) -> Vec2<T> {
        let two = T::lit(2.0);
        (self.b - self.a) * (two * (T::one() - t)) + (self.c - self.b) * (two * t)
    }

    /// Chord-length arc length with `segments` uniform parameter steps.
    pub fn chord_length(&self, segments: usize) -> T {
        let n = T::from_usize(segments).unwrap();
        let mut prev = self.a;
        let mut total = T::zero();
        for k in 1..=segments {
            let p = self.eval(T::from_usize(k).unwrap() / n);
            total += (p - prev).norm();
            prev = p;
        }
        total
    }

    /// Squared distance from `p` to the axis-aligned box around the control points.
    ///
    /// The curve lies in the convex hull of `a, b, c`, so this bounds the curve distance from below.
    #[inline]
    pub fn bbox_distance_sq(&self, p: Vec2<T>) -> T {
        let lo_x = self.a.x.min(self.b.x).min(self.c.x);
        let hi_x = self.a.x.max(self.b.x).max(self.c.x);
        let lo_y = self.a.y.min(self.b.y).min(self.c.y);
        let hi_y = self.a.y.max(self.b.y).max(self.c.y);
        let dx = (lo_x - p.x).max(p.x - hi_x).max(T::zero());
        let dy = (lo_y - p.y).max(p.y - hi_y).max(T::zero());
        dx * dx + dy * dy
    }

    /// True when the curve is numerically a straight segment traversed at constant speed.
    pub fn is_degenerate(&self) -> bool {
        let big_a = self.b - self.a;
        let big_b = self.c - self.b * T::lit(2.0) + self.a;
        let scale_sq = big_a.norm_sq().max((self.c - self.b).norm_sq());
        big_b.norm_sq() < T::lit(DEGENERATE_RATIO) * scale_sq || scale_sq == T::zero()
    }

    /// Global minimizer of `‖p − γ(t)‖` over `t ∈ [0, 1]`.
    pub fn closest_point(&self, p: Vec2<T>) -> ClosestPoint<T> {
        let big_a = self.b - self.a;
        let big_b = self.c - self.b * T::lit(2.0) + self.a;
        let scale_sq = big_a.norm_sq().max((self.c - self.b).norm_sq());

        if scale_sq == T::zero() {
            return ClosestPoint {
                t: T::zero(),
                point: self.a,
                distance: (p - self.a).norm(),
            };
        }
        if big_b.norm_sq() < T::lit(DEGENERATE_RATIO) * scale_sq {
            let (t, point) = project_on_segment(p, self.a, self.c);
            return ClosestPoint {
                t,
                point,
                distance: (p - point).norm(),
            };
        }

        let ap = self.a - p;
        let k3 = big_b.norm_sq();
        let k2 = T::lit(3.0) * big_a.dot(big_b);
        let k1 = T::lit(2.0) * big_a.norm_sq() + big_b.dot(ap);
        let k0 = big_a.dot(ap);

        let mut best_t = T::zero();
        let mut best_d2 = ap.norm_sq();
        let d2_end = (self.c - p).norm_sq();
        if d2_end < best_d2 {
            best_t = T::one();
            best_d2 = d2_end;
        }

        let (roots, count) = solve_cubic(k3, k2, k1, k0);
        for &root in &roots[..count] {
            let t = polish(root, k3, k2, k1, k0).max(T::zero()).min(T::one());
            let d2 = (self.eval(t) - p).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best_t = t;
            }
        }

        ClosestPoint {
            t: best_t,
            point: self.eval(best_t),
            distance: best_d2.sqrt(),
        }
    }

    #[inline]
    pub fn distance(&self, p: Vec2<T>) -> T {
        self.closest_point(p).distance
    }
}

/// Projection of `p` onto segment `[a, c]`; returns the clamped parameter and the foot point.
#[inline]
pub fn project_on_segment<T: Real>(p: Vec2<T>, a: Vec2<T>, c: Vec2<T>) -> (T, Vec2<T>) {
    let ac = c - a;
    let len_sq = ac.norm_sq();
    if len_sq == T::zero() {
        return (T::zero(), a);
    }
    let t = ((p - a).dot(ac) / len_sq).max(T::zero()).min(T::one());
    (t, a + ac * t)
}

/// Exact distance from `p` to segment `[a, c]`.
#[inline]
pub fn segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, c: Vec2<T>) -> T {
    let (_, foot) = project_on_segment(p, a, c);
    (p - foot).norm()
}

#[inline]
fn polish<T: Real>(t: T, k3: T, k2: T, k1: T, k0: T) -> T {
    let f = ((k3 * t + k2) * t + k1) * t + k0;
    let df = (T::lit(3.0) * k3 * t + T::lit(2.0) * k2) * t + k1;
    if df != T::zero() && df.is_finite() {
        let next = t - f / df;
        if next.is_finite() {
            return next;
        }
    }
    t
}

/// Real roots of `k3 t³ + k2 t² + k1 t + k0` with `k3 ≠ 0`.
///
/// Returns up to three roots (unordered) and their count.
pub fn solve_cubic<T: Real>(k3: T, k2: T, k1: T, k0: T) -> ([T; 3], usize) {
    let zero = T::zero();
    let three = T::lit(3.0);
    let a2 = k2 / k3;
    let a1 = k1 / k3;
    let a0 = k0 / k3;

    let shift = -a2 / three;
    let p = a1 - a2 * a2 / three;
    let q = T::lit(2.0) * a2 * a2 * a2 / T::lit(27.0) - a2 * a1 / three + a0;
    let half_q = q * T::lit(0.5);
    let third_p = p / three;
    let disc = half_q * half_q + third_p * third_p * third_p;

    if disc >= zero {
        // One real root; pick the cube-root branch free of cancellation.
        let s = disc.sqrt();
        let u = if half_q >= zero {
            (-half_q - s).cbrt()
        } else {
            (-half_q + s).cbrt()
        };
        let x = if u != zero { u - third_p / u } else { zero };
        ([x + shift, zero, zero], 1)
    } else {
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / (r * r * r)).max(-T::one()).min(T::one());
        let phi = cos_arg.acos() / three;
        let two_r = T::lit(2.0) * r;
        let tau_third = T::lit(2.0) * T::PI() / three;
        (
            [
                two_r * phi.cos() + shift,
                two_r * (phi - tau_third).cos() + shift,
                two_r * (phi + tau_third).cos() + shift,
            ],
            3,
        )
    }
}

/// Stroke lifting: the zero level set inflates to a band of half-width `thickness`.
#[inline]
pub fn lift_thickness<T: Real>(distance: T, thickness: T) -> T {
    (distance - thickness).max(T::zero())
}

/// Closed chain of curves; curve `i` ends exactly where curve `i + 1` starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<QuadraticBezier<T>>", into = "Vec<QuadraticBezier<T>>")]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct CurveLoop<T: Real> {
    curves: Vec<QuadraticBezier<T>>,
}

impl<T: Real> CurveLoop<T> {
    pub fn new(curves: Vec<QuadraticBezier<T>>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::invalid(format!(
                "a curve loop needs at least 2 curves, got {}",
                curves.len()
            )));
        }
        for c in &curves {
            c.validate()?;
        }
        let n = curves.len();
        for i in 0..n {
            let end = curves[i].c;
            let start = curves[(i + 1) % n].a;
            if end.x.bit_eq(start.x) && end.y.bit_eq(start.y) {
                continue;
            }
            return Err(Error::invalid(format!(
                "loop not closed: curve {} ends at ({}, {}) but curve {} starts at ({}, {})",
                i,
                end.x,
                end.y,
                (i + 1) % n,
                start.x,
                start.y
            )));
        }
        Ok(CurveLoop { curves })
    }

    pub fn curves(&self) -> &[QuadraticBezier<T>] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

impl<T: Real> TryFrom<Vec<QuadraticBezier<T>>> for CurveLoop<T> {
    type Error = Error;
    fn try_from(v: Vec<QuadraticBezier<T>>) -> Result<Self> {
        CurveLoop::new(v)
    }
}

impl<T: Real> From<CurveLoop<T>> for Vec<QuadraticBezier<T>> {
    fn from(l: CurveLoop<T>) -> Self {
        l.curves
    }
}

/// Bit-level equality (signed zeros differ).
trait BitsEq {
    fn bit_eq(self, o: Self) -> bool;
}

impl<T: Real> BitsEq for T {
    fn bit_eq(self, o: Self) -> bool {
        // `integer_decode` distinguishes signed zeros and every finite value.
        self.integer_decode() == o.integer_decode()
    }
}

/// Union of closed loops: the 2D shape parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned", serialize = "T: Real + Serialize"))]
pub struct CurveSet<T: Real> {
    loops: Vec<CurveLoop<T>>,
}

impl<T: Real> CurveSet<T> {
    pub fn new(loops: Vec<CurveLoop<T>>) -> Result<Self> {
        if loops.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        Ok(CurveSet { loops })
    }

    pub fn loops(&self) -> &[CurveLoop<T>] {
        &self.loops
    }

    pub fn curves(&self) -> impl Iterator<Item = &QuadraticBezier<T>> + '_ {
        self.loops.iter().flat_map(|l| l.curves.iter())
    }

    pub fn curve_count(&self) -> usize {
        self.loops.iter().map(|l| l.len()).sum()
    }

    /// Index (in [`CurveSet::curves`] order) and closest point of the curve minimizing the
    /// thickness-lifted distance, together with that lifted distance.
    pub fn closest(&self, p: Vec2<T>) -> (usize, ClosestPoint<T>, T) {
        let mut best: Option<(usize, ClosestPoint<T>, T)> = None;
        for (i, curve) in self.curves().enumerate() {
            if let Some((_, _, best_d)) = best {
                let bound = best_d + curve.thickness;
                if curve.bbox_distance_sq(p) > bound * bound {
                    continue;
                }
            }
            let cp = curve.closest_point(p);
            let lifted = lift_thickness(cp.distance, curve.thickness);
            if best.map_or(true, |(_, _, d)| lifted < d) {
                best = Some((i, cp, lifted));
            }
        }
        best.expect("curve sets are nonempty")
    }

    /// `min_i lift(d_γi(p), s_i)`.
    pub fn distance(&self, p: Vec2<T>) -> T {
        self.closest(p).2
    }
}

/// Free-function form of [`CurveSet::distance`].
pub fn curve_set_distance<T: Real>(shape: &CurveSet<T>, p: Vec2<T>) -> T {
    shape.distance(p)
}

/// Free-function form of [`QuadraticBezier::closest_point`], returning `(t̂, distance)`.
pub fn closest_point_cubic<T: Real>(curve: &QuadraticBezier<T>, p: Vec2<T>) -> (T, T) {
    let cp = curve.closest_point(p);
    (cp.t, cp.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::vec2;

    fn straight() -> QuadraticBezier<f64> {
        QuadraticBezier::from_points(vec2(0.0, 0.0), vec2(0.5, 0.0), vec2(1.0, 0.0))
    }

    /// Dense parameter scan used as the reference.
    fn scan(curve: &QuadraticBezier<f64>, p: Vec2<f64>, samples: usize) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let d = (curve.eval(t) - p).norm();
            if d < best.1 {
                best = (t, d);
            }
        }
        best
    }

    #[test]
    fn perpendicular_foot_on_straight_curve() {
        let (t, d) = closest_point_cubic(&straight(), vec2(0.5, 1.0));
        assert!((t - 0.5).abs() < 1e-12);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamps_to_start_endpoint() {
        let (t, d) = closest_point_cubic(&straight(), vec2(-1.0, 0.0));
        assert_eq!(t, 0.0);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn arch_matches_dense_scan() {
        let curve = QuadraticBezier::from_points(vec2(0.0, 0.0), vec2(1.0, 2.0), vec2(2.0, 0.0));
        let p = vec2(1.0, 0.5);
        let (t, d) = closest_point_cubic(&curve, p);
        let (ts, ds) = scan(&curve, p, 1_000_000);
        assert!((d - ds).abs() <= 1e-5, "{d} vs {ds}");
        assert!((t - ts).abs() <= 1e-5, "{t} vs {ts}");
    }

    #[test]
    fn cubic_solver_three_roots() {
        // (t - 1)(t - 2)(t - 3)
        let (roots, n) = solve_cubic(1.0f64, -6.0, 11.0, -6.0);
        assert_eq!(n, 3);
        let mut r = roots.to_vec();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_solver_single_root() {
        // (t - 0.25)(t² + 1)
        let (roots, n) = solve_cubic(1.0f64, -0.25, 1.0, -0.25);
        assert_eq!(n, 1);
        assert!((roots[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_curve_is_segment_distance() {
        let a = vec2(0.2, -0.3);
        let c = vec2(1.7, 0.9);
        let curve = QuadraticBezier::from_points(a, (a + c) * 0.5, c);
        assert!(curve.is_degenerate());
        for p in [vec2(0.0, 0.0), vec2(3.0, 1.0), vec2(-1.0, -2.0), vec2(1.0, 0.2)] {
            assert_eq!(curve.distance(p), segment_distance(p, a, c));
        }
    }

    #[test]
    fn point_curve() {
        let a = vec2(1.0, 1.0);
        let curve = QuadraticBezier::from_points(a, a, a);
        assert_eq!(curve.distance(vec2(4.0, 5.0)), 5.0);
    }

    #[test]
    fn lifting() {
        assert_eq!(lift_thickness(1.0, 0.25), 0.75);
        assert_eq!(lift_thickness(0.1, 0.25), 0.0);
        for d in [0.0, 0.3, 7.0] {
            assert_eq!(lift_thickness(d, 0.0), d);
        }
    }

    #[test]
    fn loop_requires_closure() {
        let c0 = QuadraticBezier::from_points(vec2(0.0, 0.0), vec2(0.5, 0.5), vec2(1.0, 0.0));
        let c1 = QuadraticBezier::from_points(vec2(1.0, 0.0), vec2(0.5, -0.5), vec2(0.0, 0.0));
        assert!(CurveLoop::new(vec![c0, c1]).is_ok());
        let bad = QuadraticBezier::from_points(vec2(1.0, 1e-12), vec2(0.5, -0.5), vec2(0.0, 0.0));
        assert!(CurveLoop::new(vec![c0, bad]).is_err());
        assert!(CurveLoop::new(vec![c0]).is_err());
        assert!(matches!(CurveSet::<f64>::new(vec![]), Err(Error::EmptyGeometry)));
    }

    #[test]
    fn set_distance_is_zero_at_endpoints_and_uses_thickness() {
        let c0 = QuadraticBezier::<f64>::new(vec2(0.0, 0.0), vec2(0.5, 0.5), vec2(1.0, 0.0), 0.1).unwrap();
        let c1 = QuadraticBezier::new(vec2(1.0, 0.0), vec2(0.5, -0.5), vec2(0.0, 0.0), 0.0).unwrap();
        let set = CurveSet::new(vec![CurveLoop::new(vec![c0, c1]).unwrap()]).unwrap();
        assert_eq!(set.distance(vec2(0.0, 0.0)), 0.0);
        assert_eq!(set.distance(vec2(1.0, 0.0)), 0.0);
        // Above the first arch: lifted by its thickness.
        let p = vec2(0.5, 1.0);
        let expect = lift_thickness(c0.distance(p), 0.1).min(c1.distance(p));
        assert!((set.distance(p) - expect).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let curve: QuadraticBezier<f32> =
            QuadraticBezier::from_points(vec2(0.0, 0.0), vec2(1.0, 2.0), vec2(2.0, 0.0));
        let d = curve.distance(vec2(1.0, 2.0));
        assert!((d - 1.0).abs() < 1e-5);
    }
}
