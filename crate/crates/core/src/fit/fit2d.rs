//! Fitting closed Bézier loops to 2D unsigned distance fields.

use rayon::prelude::*;

use super::{chunked_gradient, optimize, FitConfig, FitReport, Model, Objective, Progress, CHUNK};
use crate::error::{Error, Result};
use crate::field::{raster_outline, rasterize_distance_2d, GridSpec, Outline, Raster, ScalarField, Shape2d};
use crate::geometry2d::{CurveSet, QuadraticBezier};
use crate::template::{unpack, Template};
use crate::vector::vec2;

/// Padding around the unit em box on every side.
pub const GLYPH_PADDING: f64 = 0.1;

/// `n × n` cell-centered grid over the em box `[0, 1]²` padded by 10%.
pub fn glyph_grid(n: usize) -> Result<GridSpec<f64>> {
    GridSpec::square(n, -GLYPH_PADDING, 1.0 + GLYPH_PADDING)
}

pub fn target_from_curves(shape: &CurveSet<f64>, n: usize) -> Result<ScalarField<f64>> {
    rasterize_distance_2d(Shape2d::Curves(shape), &glyph_grid(n)?)
}

pub fn target_from_outline(outline: &Outline<f64>, n: usize) -> Result<ScalarField<f64>> {
    rasterize_distance_2d(Shape2d::Outline(outline), &glyph_grid(n)?)
}

/// Distance field to the half-intensity contour of a raster spanning the em box.
pub fn target_from_raster(raster: &Raster, n: usize) -> Result<ScalarField<f64>> {
    let outline = raster_outline(raster, 0.5);
    if outline.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    target_from_outline(&outline, n)
}

/// Curves over a template's connectivity; parameters are point coordinates, then optionally
/// one thickness per curve.
#[derive(Clone, Debug)]
pub struct CurveModel {
    pub template: Template,
    pub thickness: bool,
}

impl CurveModel {
    pub fn new(template: Template, thickness: bool) -> Self {
        CurveModel { template, thickness }
    }

    fn curves(&self, params: &[f64]) -> Vec<QuadraticBezier<f64>> {
        let base = 2 * self.template.point_count();
        let pt = |i: usize| vec2(params[2 * i], params[2 * i + 1]);
        self.template
            .connectivity
            .iter()
            .enumerate()
            .map(|(k, &[s, m, e])| QuadraticBezier {
                a: pt(s),
                b: pt(m),
                c: pt(e),
                thickness: if self.thickness { params[base + k] } else { 0.0 },
            })
            .collect()
    }

    pub fn shape(&self, params: &[f64]) -> Result<CurveSet<f64>> {
        unpack(&self.template, params)
    }
}

#[inline]
fn lifted(c: &QuadraticBezier<f64>, p: crate::vector::Vec2<f64>) -> f64 {
    (c.closest_point(p).distance - c.thickness).max(0.0)
}

impl Model for CurveModel {
    fn param_len(&self) -> usize {
        self.template.vector_len(self.thickness)
    }

    fn evaluate(&self, params: &[f64], grid: &GridSpec<f64>, values: &mut [f64], arg: &mut [u32]) {
        let curves = self.curves(params);
        values
            .par_chunks_mut(CHUNK)
            .zip(arg.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(chunk, (vals, args))| {
                let mut hint = 0usize;
                for (k, (v, a)) in vals.iter_mut().zip(args.iter_mut()).enumerate() {
                    let p = grid.center2(chunk * CHUNK + k);
                    let mut best = lifted(&curves[hint], p);
                    let mut best_i = hint;
                    for (i, c) in curves.iter().enumerate() {
                        if i == hint {
                            continue;
                        }
                        let lower = (c.bbox_distance_sq(p).sqrt() - c.thickness).max(0.0);
                        if lower >= best {
                            continue;
                        }
                        let d = lifted(c, p);
                        if d < best {
                            best = d;
                            best_i = i;
                        }
                    }
                    hint = best_i;
                    *v = best;
                    *a = best_i as u32;
                }
            });
    }

    fn backprop(&self, params: &[f64], grid: &GridSpec<f64>, adj: &[f64], arg: &[u32], grad: &mut [f64]) {
        let curves = self.curves(params);
        let base = 2 * self.template.point_count();
        let conn = &self.template.connectivity;
        let thickness = self.thickness;
        chunked_gradient(adj.len(), params.len(), grad, |range, g| {
            for idx in range {
                let w = adj[idx];
                if w == 0.0 {
                    continue;
                }
                let i = arg[idx] as usize;
                let c = &curves[i];
                let p = grid.center2(idx);
                let cp = c.closest_point(p);
                if cp.distance - c.thickness <= 0.0 || cp.distance == 0.0 {
                    continue;
                }
                // ∂d/∂γ = −(p − γ)/|p − γ|; γ is linear in a, b, c with Bernstein weights.
                let n = (p - cp.point) / cp.distance;
                let t = cp.t;
                let s = 1.0 - t;
                let [ia, ib, ic] = conn[i];
                for (pi, bw) in [(ia, s * s), (ib, 2.0 * s * t), (ic, t * t)] {
                    g[2 * pi] -= w * bw * n.x;
                    g[2 * pi + 1] -= w * bw * n.y;
                }
                if thickness {
                    g[base + i] -= w;
                }
            }
        });
    }

    fn project(&self, params: &mut [f64]) {
        if self.thickness {
            let base = 2 * self.template.point_count();
            for s in &mut params[base..] {
                *s = s.max(0.0);
            }
        }
    }
}

/// Fits the template's curves to an unsigned 2D target field.
pub fn fit2d(
    target: &ScalarField<f64>,
    template: &Template,
    cfg: &FitConfig,
    progress: Option<Progress<'_>>,
) -> Result<(CurveSet<f64>, FitReport)> {
    if target.grid().rank() != 2 {
        return Err(Error::GridMismatch(format!(
            "2D fit needs a rank-2 target, got rank {}",
            target.grid().rank()
        )));
    }
    if target.has_negative() {
        return Err(Error::invalid("2D targets are unsigned distance fields"));
    }
    let model = CurveModel::new(template.clone(), cfg.thickness_enabled);
    let mut init = template.params();
    if cfg.thickness_enabled {
        init.extend(std::iter::repeat(0.0).take(template.curve_count()));
    }
    let objective = Objective::new(model, target, Some(template.params()), cfg.loss.clone())?;
    let report = optimize(&objective, init, cfg, progress)?;
    let shape = objective.model.shape(&report.final_params)?;
    Ok((shape, report))
}
