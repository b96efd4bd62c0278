//! Regular-grid scalar fields.
//!
//! Cells are addressed row-major with x fastest. Samples live at cell centers:
//! `origin + (i + ½) · spacing` per axis, so `origin` is the lower corner of the domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry2d::{segment_distance, CurveSet};
use crate::scalar::Real;
use crate::vector::{vec2, Vec2, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    rank: usize,
    dims: [usize; 3],
    origin: [T; 3],
    spacing: [T; 3],
}

impl<T: Real> GridSpec<T> {
    /// Grid from per-axis dims, lower corner and spacing (`dims.len()` is the rank).
    pub fn new(dims: &[usize], origin: &[T], spacing: &[T]) -> Result<Self> {
        let rank = dims.len();
        if !(rank == 2 || rank == 3) {
            return Err(Error::invalid(format!("grid rank must be 2 or 3, got {rank}")));
        }
        if origin.len() != rank || spacing.len() != rank {
            return Err(Error::invalid("origin and spacing must match the grid rank"));
        }
        let mut g = GridSpec {
            rank,
            dims: [1; 3],
            origin: [T::zero(); 3],
            spacing: [T::one(); 3],
        };
        for k in 0..rank {
            if dims[k] == 0 {
                return Err(Error::invalid("grid dims must be positive"));
            }
            if !(spacing[k] > T::zero()) || !spacing[k].is_finite() || !origin[k].is_finite() {
                return Err(Error::invalid("grid spacing must be positive and origin finite"));
            }
            g.dims[k] = dims[k];
            g.origin[k] = origin[k];
            g.spacing[k] = spacing[k];
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::invalid("grid too large"))?;
        Ok(g)
    }

    /// Cell-centered grid covering the box `[min, max]`.
    pub fn from_bounds(dims: &[usize], min: &[T], max: &[T]) -> Result<Self> {
        if min.len() != dims.len() || max.len() != dims.len() {
            return Err(Error::invalid("bounds must match the grid rank"));
        }
        let spacing: Vec<T> = (0..dims.len())
            .map(|k| (max[k] - min[k]) / T::from_usize(dims[k].max(1)).unwrap())
            .collect();
        if spacing.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::invalid("bounds must be nonempty on every axis"));
        }
        Self::new(dims, min, &spacing)
    }

    /// Square 2D grid over `[lo, hi]²`.
    pub fn square(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::from_bounds(&[n, n], &[lo, lo], &[hi, hi])
    }

    /// Cubic 3D grid over `[lo, hi]³`.
    pub fn cube(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::from_bounds(&[n, n, n], &[lo, lo, lo], &[hi, hi, hi])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.rank]
    }

    pub fn origin(&self) -> &[T] {
        &self.origin[..self.rank]
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.rank]
    }

    /// Padded (x, y, z) dims; unused axes are 1.
    pub fn dims3(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing3(&self) -> [T; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Center of the cell with flat index `idx`; unused axes are zero.
    #[inline]
    pub fn center(&self, idx: usize) -> [T; 3] {
        let c = self.coords(idx);
        let half = T::lit(0.5);
        let mut out = [T::zero(); 3];
        for k in 0..self.rank {
            out[k] = self.origin[k] + (T::from_usize(c[k]).unwrap() + half) * self.spacing[k];
        }
        out
    }

    #[inline]
    pub fn center2(&self, idx: usize) -> Vec2<T> {
        let c = self.center(idx);
        vec2(c[0], c[1])
    }

    #[inline]
    pub fn center3(&self, idx: usize) -> Vec3<T> {
        Vec3::from_array(self.center(idx))
    }

    /// Length of the cell diagonal.
    pub fn cell_diagonal(&self) -> T {
        self.spacing().iter().map(|&s| s * s).sum::<T>().sqrt()
    }

    /// Default Smootherstep support: twice the cell diagonal.
    pub fn default_gamma(&self) -> T {
        T::lit(2.0) * self.cell_diagonal()
    }

    /// Same rank, dims, origin and spacing (exact comparison).
    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }

    pub fn cast<U: Real>(&self) -> GridSpec<U> {
        let c = |a: [T; 3]| a.map(|v| U::lit(v.to_f64_lossy()));
        GridSpec {
            rank: self.rank,
            dims: self.dims,
            origin: c(self.origin),
            spacing: c(self.spacing),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![T::zero(); n],
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn has_negative(&self) -> bool {
        self.values.iter().any(|&v| v < T::zero())
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "dims {:?} vs {:?}",
                self.grid.dims(),
                other.grid.dims()
            )))
        }
    }

    pub fn cast<U: Real>(&self) -> ScalarField<U> {
        ScalarField {
            grid: self.grid.cast(),
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

/// Evaluates `f` at every cell center, in parallel; the output is independent of scheduling.
pub fn evaluate_on_grid<T, F>(grid: &GridSpec<T>, f: F) -> ScalarField<T>
where
    T: Real,
    F: Fn([T; 3]) -> T + Sync,
{
    let n = grid.len();
    let mut values = vec![T::zero(); n];
    values
        .par_chunks_mut(4096)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk * 4096;
            for (k, v) in out.iter_mut().enumerate() {
                *v = f(grid.center(base + k));
            }
        });
    ScalarField {
        grid: grid.clone(),
        values,
    }
}

pub fn evaluate_2d<T: Real>(grid: &GridSpec<T>, f: impl Fn(Vec2<T>) -> T + Sync) -> ScalarField<T> {
    evaluate_on_grid(grid, |c| f(vec2(c[0], c[1])))
}

pub fn evaluate_3d<T: Real>(grid: &GridSpec<T>, f: impl Fn(Vec3<T>) -> T + Sync) -> ScalarField<T> {
    evaluate_on_grid(grid, |c| f(Vec3::from_array(c)))
}

/// Closed polylines (glyph outlines, polygons) or loose segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outline<T> {
    segments: Vec<[Vec2<T>; 2]>,
}

impl<T: Real> Outline<T> {
    /// Each loop is closed back to its first point.
    pub fn from_loops(loops: &[Vec<Vec2<T>>]) -> Self {
        let mut segments = Vec::new();
        for lp in loops {
            let n = lp.len();
            if n < 2 {
                continue;
            }
            for i in 0..n {
                let a = lp[i];
                let b = lp[(i + 1) % n];
                if n == 2 && i == 1 {
                    break;
                }
                segments.push([a, b]);
            }
        }
        Outline { segments }
    }

    pub fn from_segments(segments: Vec<[Vec2<T>; 2]>) -> Self {
        Outline { segments }
    }

    pub fn segments(&self) -> &[[Vec2<T>; 2]] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self) -> T {
        self.segments.iter().map(|[a, b]| (*b - *a).norm()).sum()
    }

    pub fn distance(&self, p: Vec2<T>) -> T {
        let mut best = T::infinity();
        for [a, b] in &self.segments {
            // Cheap box rejection before the exact projection.
            let dx = (a.x.min(b.x) - p.x).max(p.x - a.x.max(b.x)).max(T::zero());
            let dy = (a.y.min(b.y) - p.y).max(p.y - a.y.max(b.y)).max(T::zero());
            if dx * dx + dy * dy >= best * best {
                continue;
            }
            best = best.min(segment_distance(p, *a, *b));
        }
        best
    }
}

/// 2D geometry whose outline distance can be rasterized.
pub enum Shape2d<'a, T: Real> {
    Curves(&'a CurveSet<T>),
    Outline(&'a Outline<T>),
}

/// Unsigned distance to the shape outline at every cell center.
pub fn rasterize_distance_2d<T: Real>(shape: Shape2d<'_, T>, grid: &GridSpec<T>) -> Result<ScalarField<T>> {
    if grid.rank() != 2 {
        return Err(Error::invalid("2D rasterization needs a rank-2 grid"));
    }
    match shape {
        Shape2d::Curves(set) => {
            // Zero thickness: the outline of the curves themselves.
            Ok(evaluate_2d(grid, |p| set.distance(p)))
        }
        Shape2d::Outline(outline) => {
            if outline.is_empty() {
                return Err(Error::EmptyGeometry);
            }
            Ok(evaluate_2d(grid, |p| outline.distance(p)))
        }
    }
}

/// Finite-difference gradient at a cell: central in the interior, one-sided at the boundary.
///
/// Components past the grid rank are zero.
#[inline]
pub fn gradient_fd<T: Real>(f: &ScalarField<T>, idx: usize) -> [T; 3] {
    let g = &f.grid;
    let c = g.coords(idx);
    let strides = [1, g.dims[0], g.dims[0] * g.dims[1]];
    let mut out = [T::zero(); 3];
    for k in 0..g.rank {
        let n = g.dims[k];
        let h = g.spacing[k];
        let v = &f.values;
        out[k] = if n < 2 {
            T::zero()
        } else if c[k] == 0 {
            (v[idx + strides[k]] - v[idx]) / h
        } else if c[k] == n - 1 {
            (v[idx] - v[idx - strides[k]]) / h
        } else {
            (v[idx + strides[k]] - v[idx - strides[k]]) / (T::lit(2.0) * h)
        };
    }
    out
}

/// `6x⁵ − 15x⁴ + 10x³` on `[0, 1]`.
#[inline]
pub fn smootherstep<T: Real>(x: T) -> T {
    let x = x.max(T::zero()).min(T::one());
    x * x * x * (x * (x * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
}

#[inline]
pub fn smootherstep_derivative<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    let s = x * (T::one() - x);
    T::lit(30.0) * s * s
}

/// Smooth surface indicator `Smootherstep(1 − d²/γ²)`.
#[inline]
pub fn smootherstep_mask<T: Real>(d_squared: T, gamma: T) -> T {
    smootherstep(T::one() - d_squared / (gamma * gamma))
}

/// Derivative of [`smootherstep_mask`] with respect to `d²`.
#[inline]
pub fn smootherstep_mask_derivative<T: Real>(d_squared: T, gamma: T) -> T {
    let g2 = gamma * gamma;
    -smootherstep_derivative(T::one() - d_squared / g2) / g2
}

/// Grayscale image with intensities in `[0, 1]`, row-major from the top-left pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Raster { width, height, pixels })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Iso-contour of a raster at `level` by marching squares.
///
/// Pixel `(x, y)` has its center at `((x + ½)/W, (y + ½)/H)` in the unit frame. The image is
/// padded with background (the rounded mean of the border pixels) so contours close.
pub fn raster_outline(raster: &Raster, level: f64) -> Outline<f64> {
    let (w, h) = (raster.width, raster.height);
    if w == 0 || h == 0 {
        return Outline::from_segments(Vec::new());
    }
    let mut border = Vec::new();
    for x in 0..w {
        border.push(raster.get(x, 0));
        border.push(raster.get(x, h - 1));
    }
    for y in 0..h {
        border.push(raster.get(0, y));
        border.push(raster.get(w - 1, y));
    }
    let mean = border.iter().sum::<f64>() / border.len() as f64;
    let background = if mean >= level { 1.0 } else { 0.0 };

    // Padded sample lookup: indices shifted by one.
    let sample = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            background
        } else {
            raster.get(x as usize, y as usize)
        }
    };
    let pos = |x: f64, y: f64| vec2((x + 0.5) / w as f64, (y + 0.5) / h as f64);

    let mut segments = Vec::new();
    for cy in -1..h as isize {
        for cx in -1..w as isize {
            let v = [
                sample(cx, cy),
                sample(cx + 1, cy),
                sample(cx + 1, cy + 1),
                sample(cx, cy + 1),
            ];
            let corners = [
                (cx as f64, cy as f64),
                (cx as f64 + 1.0, cy as f64),
                (cx as f64 + 1.0, cy as f64 + 1.0),
                (cx as f64, cy as f64 + 1.0),
            ];
            let mut case = 0;
            for (bit, &val) in v.iter().enumerate() {
                if val >= level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // Crossing on edge e joins corner e and e + 1.
            let cross = |e: usize| {
                let (a, b) = (e, (e + 1) % 4);
                let t = (level - v[a]) / (v[b] - v[a]);
                let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
                let (xa, ya) = corners[a];
                let (xb, yb) = corners[b];
                pos(xa + (xb - xa) * t, ya + (yb - ya) * t)
            };
            let center_high = (v.iter().sum::<f64>() / 4.0) >= level;
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 => {
                    if center_high {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if center_high {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(0, 1), (2, 3)]
                    }
                }
                _ => &[],
            };
            for &(e0, e1) in pairs {
                segments.push([cross(e0), cross(e1)]);
            }
        }
    }
    Outline::from_segments(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centers_and_gamma() {
        let g = GridSpec::<f64>::square(4, 0.0, 1.0).unwrap();
        assert_eq!(g.center(0), [0.125, 0.125, 0.0]);
        assert_eq!(g.center(g.index(3, 1, 0)), [0.875, 0.375, 0.0]);
        assert!((g.default_gamma() - 2.0 * 0.25 * 2f64.sqrt()).abs() < 1e-15);
        let g3 = GridSpec::<f64>::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(g3.center(7), [0.5, 0.5, 0.5]);
        assert!((g3.default_gamma() - 2.0 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::<f64>::new(&[4], &[0.0], &[1.0]).is_err());
        assert!(GridSpec::<f64>::new(&[4, 4], &[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(GridSpec::<f64>::from_bounds(&[4, 4], &[0.0, 1.0], &[1.0, 1.0]).is_err());
        let g = GridSpec::<f64>::square(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 8]),
            Err(Error::LengthMismatch { expected: 9, actual: 8 })
        ));
    }

    #[test]
    fn horizontal_segment_on_three_by_three() {
        let outline = Outline::from_segments(vec![[vec2(0.0, 0.5), vec2(1.0, 0.5)]]);
        let g = GridSpec::<f64>::square(3, 0.0, 1.0).unwrap();
        let f = rasterize_distance_2d(Shape2d::Outline(&outline), &g).unwrap();
        for i in 0..3 {
            assert!(f.get(i, 1, 0).abs() < 1e-15);
            assert!((f.get(i, 0, 0) - 1.0 / 3.0).abs() < 1e-15);
            assert!((f.get(i, 2, 0) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_outline_is_rejected() {
        let g = GridSpec::<f64>::square(3, 0.0, 1.0).unwrap();
        let empty = Outline::from_segments(vec![]);
        assert!(matches!(
            rasterize_distance_2d(Shape2d::Outline(&empty), &g),
            Err(Error::EmptyGeometry)
        ));
    }

    #[test]
    fn linear_fields_have_exact_gradients() {
        let g = GridSpec::<f64>::from_bounds(&[5, 7], &[-1.0, 0.0], &[2.0, 3.5]).unwrap();
        let fx = evaluate_2d(&g, |p| p.x);
        let fy = evaluate_2d(&g, |p| p.y);
        for idx in 0..g.len() {
            let gx = gradient_fd(&fx, idx);
            let gy = gradient_fd(&fy, idx);
            assert!((gx[0] - 1.0).abs() < 1e-12 && gx[1].abs() < 1e-12);
            assert!(gy[0].abs() < 1e-12 && (gy[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_distance_gradient_is_radial() {
        let g = GridSpec::<f64>::square(128, -1.0, 1.0).unwrap();
        let f = evaluate_2d(&g, |p| p.norm());
        let idx = g.index(110, 30, 0);
        let c = g.center2(idx);
        let grad = gradient_fd(&f, idx);
        let radial = c / c.norm();
        assert!((grad[0] - radial.x).abs() < 1e-2 && (grad[1] - radial.y).abs() < 1e-2);
    }

    #[test]
    fn smootherstep_mask_values() {
        assert_eq!(smootherstep_mask(0.0, 0.3), 1.0);
        assert_eq!(smootherstep_mask(0.09, 0.3), 0.0);
        assert_eq!(smootherstep_mask(0.5, 0.3), 0.0);
        assert!((smootherstep_mask(0.045f64, 0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smootherstep_is_c2_at_ends() {
        assert_eq!(smootherstep_derivative(0.0), 0.0);
        assert_eq!(smootherstep_derivative(1.0), 0.0);
        assert!(smootherstep_derivative(1e-4) < 1e-6);
        assert!(smootherstep_derivative(1.0 - 1e-4) < 1e-6);
    }

    #[test]
    fn marching_squares_square_blob() {
        // 8x8 image with a 4x4 block of ink.
        let mut px = vec![0.0; 64];
        for y in 2..6 {
            for x in 2..6 {
                px[y * 8 + x] = 1.0;
            }
        }
        let r = Raster::new(8, 8, px).unwrap();
        let o = raster_outline(&r, 0.5);
        assert!(!o.is_empty());
        // Contour runs midway between pixel centers 1|2 and 5|6: x = 2/8 .. 6/8.
        for [a, b] in o.segments() {
            for p in [a, b] {
                let on_x = (p.x - 0.25).abs() < 1e-12 || (p.x - 0.75).abs() < 1e-12;
                let on_y = (p.y - 0.25).abs() < 1e-12 || (p.y - 0.75).abs() < 1e-12;
                assert!(on_x || on_y, "{p:?}");
            }
        }
    }
}
