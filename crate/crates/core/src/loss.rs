//! Distance-field losses evaluated by grid quadrature, plus the sampled Chamfer baseline.
//!
//! `A` is the predicted field and `B` the target throughout. The `*_adjoint` variants add
//! `∂loss/∂d_A(x)` for every cell into a caller-provided buffer, which the fitter chains into
//! shape-parameter gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    gradient_fd, smootherstep_mask, smootherstep_mask_derivative, Outline, ScalarField,
};
use crate::geometry2d::CurveSet;
use crate::scalar::Real;
use crate::vector::{Vec2, Vec3};

/// Loss weights and schedules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha_align: f64,
    pub alpha_template: f64,
    /// Template decay time constant `s`, in iterations.
    pub template_decay_s: u32,
    /// Smootherstep support; `None` uses twice the grid's cell diagonal.
    pub gamma: Option<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha_align: 0.01,
            alpha_template: 10.0,
            template_decay_s: 500,
            gamma: None,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_align >= 0.0 && self.alpha_template >= 0.0) {
            return Err(Error::invalid("loss weights must be >= 0"));
        }
        if self.template_decay_s == 0 {
            return Err(Error::invalid("template decay s must be positive"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::invalid("gamma must be positive"));
            }
        }
        Ok(())
    }

    pub fn gamma_for<T: Real>(&self, field: &ScalarField<T>) -> T {
        match self.gamma {
            Some(g) => T::lit(g),
            None => field.grid().default_gamma(),
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub surface: f64,
    pub align: f64,
    pub template: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn assemble(surface: f64, align: f64, template: f64, alpha_align: f64) -> Self {
        LossBreakdown {
            surface,
            align,
            template,
            total: surface + alpha_align * align + template,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.surface.is_finite() && self.align.is_finite() && self.template.is_finite() && self.total.is_finite()
    }
}

/// `(1/|G|) Σ [m_A d_B² + m_B d_A²]` with `m = Smootherstep(1 − d²/γ²)`.
pub fn surface_loss<T: Real>(pred: &ScalarField<T>, target: &ScalarField<T>, gamma: T) -> Result<T> {
    pred.ensure_same_grid(target)?;
    let mut acc = T::zero();
    for (&a, &b) in pred.values().iter().zip(target.values()) {
        let (a2, b2) = (a * a, b * b);
        acc += smootherstep_mask(a2, gamma) * b2 + smootherstep_mask(b2, gamma) * a2;
    }
    Ok(acc / T::from_usize(pred.values().len()).unwrap())
}

/// Surface loss with each smoothed indicator normalized to unit mass:
/// `Σ m_A d_B² / Σ m_A + Σ m_B d_A² / Σ m_B`.
///
/// This is the discretization in which the surface loss approximates the symmetric variational
/// Chamfer distance; [`surface_loss`] differs from it by the grid-dependent mask masses.
pub fn surface_loss_normalized<T: Real>(pred: &ScalarField<T>, target: &ScalarField<T>, gamma: T) -> Result<T> {
    pred.ensure_same_grid(target)?;
    let (mut num_a, mut mass_a, mut num_b, mut mass_b) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (&a, &b) in pred.values().iter().zip(target.values()) {
        let (a2, b2) = (a * a, b * b);
        let ma = smootherstep_mask(a2, gamma);
        let mb = smootherstep_mask(b2, gamma);
        num_a += ma * b2;
        mass_a += ma;
        num_b += mb * a2;
        mass_b += mb;
    }
    if mass_a == T::zero() || mass_b == T::zero() {
        return Err(Error::invalid("a field has no cells within gamma of its zero level set"));
    }
    Ok(num_a / mass_a + num_b / mass_b)
}

/// [`surface_loss`] plus its derivative with respect to every predicted value, added to `adj`.
pub fn surface_loss_adjoint<T: Real>(
    pred: &ScalarField<T>,
    target: &ScalarField<T>,
    gamma: T,
    scale: T,
    adj: &mut [T],
) -> Result<T> {
    pred.ensure_same_grid(target)?;
    let n = T::from_usize(pred.values().len()).unwrap();
    let w = scale / n;
    let two = T::lit(2.0);
    let mut acc = T::zero();
    for ((&a, &b), g) in pred.values().iter().zip(target.values()).zip(adj.iter_mut()) {
        let (a2, b2) = (a * a, b * b);
        let ma = smootherstep_mask(a2, gamma);
        let mb = smootherstep_mask(b2, gamma);
        acc += ma * b2 + mb * a2;
        let dma = smootherstep_mask_derivative(a2, gamma);
        *g += w * (dma * two * a * b2 + mb * two * a);
    }
    Ok(acc / n)
}

/// Gradient threshold below which a cell is treated as a medial-axis / extremum cell.
fn align_epsilon<T: Real>(field: &ScalarField<T>) -> T {
    let h = field
        .grid()
        .spacing()
        .iter()
        .fold(T::infinity(), |m, &s| m.min(s));
    T::lit(1e-6) / h
}

#[inline]
fn norm3<T: Real>(g: [T; 3]) -> T {
    (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
}

/// `(1/|G|) Σ [1 − ⟨∇d_A, ∇d_B⟩²]` over unit finite-difference gradients.
///
/// Cells where either gradient norm is at most `1e-6 / spacing` contribute zero.
pub fn align_loss<T: Real>(pred: &ScalarField<T>, target: &ScalarField<T>) -> Result<T> {
    pred.ensure_same_grid(target)?;
    check_align_grid(pred)?;
    let eps = align_epsilon(pred);
    let mut acc = T::zero();
    for idx in 0..pred.values().len() {
        let ga = gradient_fd(pred, idx);
        let gb = gradient_fd(target, idx);
        let (na, nb) = (norm3(ga), norm3(gb));
        if na <= eps || nb <= eps {
            continue;
        }
        let c = (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]) / (na * nb);
        acc += T::one() - c * c;
    }
    Ok(acc / T::from_usize(pred.values().len()).unwrap())
}

fn check_align_grid<T: Real>(f: &ScalarField<T>) -> Result<()> {
    if f.grid().dims().iter().any(|&d| d < 3) {
        return Err(Error::invalid("alignment loss needs at least 3 cells per axis"));
    }
    Ok(())
}

/// [`align_loss`] plus `scale · ∂loss/∂d_A(x)` added to `adj`.
pub fn align_loss_adjoint<T: Real>(
    pred: &ScalarField<T>,
    target: &ScalarField<T>,
    scale: T,
    adj: &mut [T],
) -> Result<T> {
    pred.ensure_same_grid(target)?;
    check_align_grid(pred)?;
    let grid = pred.grid();
    let dims = grid.dims3();
    let spacing = grid.spacing3();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let rank = grid.rank();
    let eps = align_epsilon(pred);
    let n = T::from_usize(pred.values().len()).unwrap();
    let w = scale / n;
    let two = T::lit(2.0);
    let mut acc = T::zero();

    for idx in 0..pred.values().len() {
        let ga = gradient_fd(pred, idx);
        let gb = gradient_fd(target, idx);
        let (na, nb) = (norm3(ga), norm3(gb));
        if na <= eps || nb <= eps {
            continue;
        }
        let ua = [ga[0] / na, ga[1] / na, ga[2] / na];
        let ub = [gb[0] / nb, gb[1] / nb, gb[2] / nb];
        let c = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
        acc += T::one() - c * c;

        // ∂(1 − c²)/∂g_A = −2c (û_B − c û_A) / |g_A|
        let coords = grid.coords(idx);
        for k in 0..rank {
            let dk = -two * c * (ub[k] - c * ua[k]) / na * w;
            let s = strides[k];
            let h = spacing[k];
            if coords[k] == 0 {
                adj[idx + s] += dk / h;
                adj[idx] -= dk / h;
            } else if coords[k] == dims[k] - 1 {
                adj[idx] += dk / h;
                adj[idx - s] -= dk / h;
            } else {
                adj[idx + s] += dk / (two * h);
                adj[idx - s] -= dk / (two * h);
            }
        }
    }
    Ok(acc / n)
}

/// Decay factor `exp(−t/s)` of the template term.
pub fn template_weight(t: usize, cfg: &LossConfig) -> f64 {
    cfg.alpha_template * (-(t as f64) / cfg.template_decay_s as f64).exp()
}

/// `α · exp(−t/s) · ‖T − current‖²`.
pub fn template_loss(current: &[f64], template: &[f64], t: usize, cfg: &LossConfig) -> Result<f64> {
    if current.len() != template.len() {
        return Err(Error::LengthMismatch {
            expected: template.len(),
            actual: current.len(),
        });
    }
    let sq: f64 = current
        .iter()
        .zip(template)
        .map(|(c, t)| (t - c) * (t - c))
        .sum();
    Ok(template_weight(t, cfg) * sq)
}

/// Gradient of [`template_loss`] with respect to `current`, added to `grad`.
pub fn template_loss_gradient(current: &[f64], template: &[f64], t: usize, cfg: &LossConfig, grad: &mut [f64]) {
    let w = 2.0 * template_weight(t, cfg);
    for ((g, c), tp) in grad.iter_mut().zip(current).zip(template) {
        *g += w * (c - tp);
    }
}

/// Combined objective; `template = None` (3D mode) leaves the template term at zero.
pub fn total_loss<T: Real>(
    pred: &ScalarField<T>,
    target: &ScalarField<T>,
    params: &[f64],
    template: Option<&[f64]>,
    t: usize,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let gamma = cfg.gamma_for(target);
    let surface = surface_loss(pred, target, gamma)?.to_f64_lossy();
    let align = align_loss(pred, target)?.to_f64_lossy();
    let template = match template {
        Some(tp) => template_loss(params, tp, t, cfg)?,
        None => 0.0,
    };
    Ok(LossBreakdown::assemble(surface, align, template, cfg.alpha_align))
}

/// Points with a squared Euclidean distance.
pub trait MetricPoint<T>: Copy {
    fn dist_sq(&self, other: &Self) -> T;
}

impl<T: Real> MetricPoint<T> for Vec2<T> {
    #[inline]
    fn dist_sq(&self, other: &Self) -> T {
        (*self - *other).norm_sq()
    }
}

impl<T: Real> MetricPoint<T> for Vec3<T> {
    #[inline]
    fn dist_sq(&self, other: &Self) -> T {
        (*self - *other).norm_sq()
    }
}

/// Directed Chamfer: mean over `from` of the squared distance to the nearest point of `to`.
pub fn chamfer_directed<T: Real, P: MetricPoint<T>>(from: &[P], to: &[P]) -> Result<T> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::invalid("Chamfer distance needs nonempty point sets"));
    }
    let mut acc = T::zero();
    for x in from {
        let best = to.iter().fold(T::infinity(), |m, y| m.min(x.dist_sq(y)));
        acc += best;
    }
    Ok(acc / T::from_usize(from.len()).unwrap())
}

/// Symmetric Chamfer distance by brute-force nearest neighbors.
pub fn chamfer_sampled<T: Real, P: MetricPoint<T>>(points_a: &[P], points_b: &[P]) -> Result<T> {
    Ok(chamfer_directed(points_a, points_b)? + chamfer_directed(points_b, points_a)?)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Equidistributed by arc length over the whole set.
    ArcLength,
    /// Equidistributed in the curve parameter, curve by curve.
    Parameter,
}

/// Chord segments per curve used for arc-length quadrature.
pub const ARC_SEGMENTS: usize = 256;

/// `n` points on the curve set, placed at the centers of `n` equal arc-length (or parameter) bins.
pub fn sample_curves_uniform<T: Real>(shape: &CurveSet<T>, n: usize, mode: SamplingMode) -> Result<Vec<Vec2<T>>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let curves: Vec<_> = shape.curves().copied().collect();
    let m = curves.len();
    let half = T::lit(0.5);
    let nf = T::from_usize(n).unwrap();

    if mode == SamplingMode::Parameter {
        let mf = T::from_usize(m).unwrap();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let u = (T::from_usize(k).unwrap() + half) * mf / nf;
            let i = u.floor().to_usize().unwrap_or(0).min(m - 1);
            let t = u - T::from_usize(i).unwrap();
            out.push(curves[i].eval(t));
        }
        return Ok(out);
    }

    // Cumulative chord lengths per curve.
    let segs = ARC_SEGMENTS;
    let segf = T::from_usize(segs).unwrap();
    let mut tables: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut totals = Vec::with_capacity(m);
    let mut grand = T::zero();
    for c in &curves {
        let mut cum = Vec::with_capacity(segs + 1);
        cum.push(T::zero());
        let mut prev = c.a;
        let mut acc = T::zero();
        for j in 1..=segs {
            let p = c.eval(T::from_usize(j).unwrap() / segf);
            acc += (p - prev).norm();
            cum.push(acc);
            prev = p;
        }
        grand += acc;
        totals.push(acc);
        tables.push(cum);
    }
    if !(grand > T::zero()) {
        return Err(Error::invalid("curve set has zero length"));
    }

    let mut out = Vec::with_capacity(n);
    let mut curve = 0;
    let mut offset = T::zero();
    for k in 0..n {
        let s = (T::from_usize(k).unwrap() + half) * grand / nf;
        while curve + 1 < m && s > offset + totals[curve] {
            offset += totals[curve];
            curve += 1;
        }
        let local = (s - offset).max(T::zero()).min(totals[curve]);
        let cum = &tables[curve];
        let j = match cum.binary_search_by(|v| v.partial_cmp(&local).unwrap()) {
            Ok(j) => j.min(segs - 1),
            Err(j) => j.saturating_sub(1).min(segs - 1),
        };
        let seg_len = cum[j + 1] - cum[j];
        let frac = if seg_len > T::zero() { (local - cum[j]) / seg_len } else { T::zero() };
        let t = (T::from_usize(j).unwrap() + frac) / segf;
        out.push(curves[curve].eval(t));
    }
    Ok(out)
}

/// `n` points equidistributed by arc length along an outline's segments.
pub fn sample_outline_uniform<T: Real>(outline: &Outline<T>, n: usize) -> Result<Vec<Vec2<T>>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let segs = outline.segments();
    let total = outline.length();
    if !(total > T::zero()) {
        return Err(Error::invalid("outline has zero length"));
    }
    let nf = T::from_usize(n).unwrap();
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut offset = T::zero();
    let mut seg_len = (segs[0][1] - segs[0][0]).norm();
    for k in 0..n {
        let s = (T::from_usize(k).unwrap() + half) * total / nf;
        while seg + 1 < segs.len() && s > offset + seg_len {
            offset += seg_len;
            seg += 1;
            seg_len = (segs[seg][1] - segs[seg][0]).norm();
        }
        let frac = if seg_len > T::zero() {
            ((s - offset) / seg_len).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        out.push(segs[seg][0].lerp(segs[seg][1], frac));
    }
    Ok(out)
}
