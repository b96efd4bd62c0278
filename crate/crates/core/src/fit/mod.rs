//! Direct per-instance optimization of shape parameters against a target field.
//!
//! A [`Model`] maps a flat parameter vector to a predicted field on the target's grid and can
//! pull a per-cell adjoint back to parameter space. [`Objective`] combines a model with the
//! losses; [`optimize`] runs Adam on it and keeps the best iterate.

pub mod adam;
pub mod fit2d;
pub mod fit3d;
pub mod prune;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::loss::{
    align_loss, align_loss_adjoint, surface_loss, surface_loss_adjoint, template_loss, template_loss_gradient,
    LossBreakdown, LossConfig,
};

pub use adam::{Adam, AdamConfig};
pub use fit2d::{fit2d, glyph_grid, target_from_curves, target_from_outline, target_from_raster, CurveModel};
pub use fit3d::{fit3d, unit_cube_grid, BoxModel, Fit3dMode, Shape3d};
pub use prune::prune_overlapping;

/// Cells per rayon task for grid sweeps.
pub(crate) const CHUNK: usize = 2048;

/// How parameter gradients are obtained.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Per-cell adjoint chained through the closest-point / SDF derivatives.
    Analytic,
    /// Forward differences over parameters with step [`FitConfig::fd_step`].
    ForwardDifference,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate to `final_ratio` times it at `max_iters`.
    Cosine { final_ratio: f64 },
}

impl LrSchedule {
    pub fn rate(&self, base: f64, t: usize, max_iters: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine { final_ratio } => {
                let x = if max_iters <= 1 { 0.0 } else { t as f64 / (max_iters - 1) as f64 };
                let c = 0.5 * (1.0 + (std::f64::consts::PI * x).cos());
                base * (final_ratio + (1.0 - final_ratio) * c)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub adam: AdamConfig,
    pub loss: LossConfig,
    pub grid_dims_2d: [usize; 2],
    pub grid_dims_3d: [usize; 3],
    pub seed: u64,
    pub thickness_enabled: bool,
    /// 3D only: a primitive is dropped when this fraction of its volume lies inside the others.
    pub prune_overlap_threshold: f64,
    pub gradient: GradientMode,
    /// Forward-difference step in parameter units.
    pub fd_step: f64,
    /// Stop after this many iterations without a new best total.
    pub patience: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 2000,
            learning_rate: 1e-2,
            schedule: LrSchedule::Cosine { final_ratio: 0.01 },
            adam: AdamConfig::default(),
            loss: LossConfig::default(),
            grid_dims_2d: [128, 128],
            grid_dims_3d: [64, 64, 64],
            seed: 0,
            thickness_enabled: false,
            prune_overlap_threshold: 0.8,
            gradient: GradientMode::Analytic,
            fd_step: 1e-4,
            patience: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.prune_overlap_threshold > 0.0 && self.prune_overlap_threshold <= 1.0) {
            return Err(Error::invalid("prune threshold must lie in (0, 1]"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
        if let LrSchedule::Cosine { final_ratio } = self.schedule {
            if !(0.0..=1.0).contains(&final_ratio) {
                return Err(Error::invalid("cosine final ratio must lie in [0, 1]"));
            }
        }
        self.adam.validate()?;
        self.loss.validate()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIterations,
    /// No new best total within the configured patience.
    Stalled,
}

/// Outcome of one fit. Equality ignores `wall_time`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub history: Vec<LossBreakdown>,
    pub best_iteration: usize,
    pub best: LossBreakdown,
    /// Parameters of the best iterate.
    pub final_params: Vec<f64>,
    /// `surface_loss(target, target)`: the quadrature floor an exact fit reaches.
    pub surface_floor: f64,
    pub termination: Termination,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for FitReport {
    fn eq(&self, o: &Self) -> bool {
        self.history == o.history
            && self.best_iteration == o.best_iteration
            && self.best == o.best
            && self.final_params == o.final_params
            && self.surface_floor == o.surface_floor
            && self.termination == o.termination
    }
}

impl FitReport {
    /// Best total seen up to each iteration.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|l| {
                best = best.min(l.total);
                best
            })
            .collect()
    }
}

/// Per-iteration observer: iteration index and its loss.
pub type Progress<'a> = &'a mut dyn FnMut(usize, &LossBreakdown);

/// A parametric shape whose distance field can be evaluated and differentiated on a grid.
pub trait Model: Sync {
    fn param_len(&self) -> usize;

    /// Writes the predicted value at every cell and, per cell, the index of the part that
    /// determined it.
    fn evaluate(&self, params: &[f64], grid: &GridSpec<f64>, values: &mut [f64], arg: &mut [u32]);

    /// Adds `Σ_x adj(x) · ∂value(x)/∂params` to `grad`.
    fn backprop(&self, params: &[f64], grid: &GridSpec<f64>, adj: &[f64], arg: &[u32], grad: &mut [f64]);

    /// Maps parameters back into the feasible set after an optimizer step.
    fn project(&self, _params: &mut [f64]) {}
}

/// Sums per-chunk parameter gradients in chunk order, so results do not depend on scheduling.
pub(crate) fn chunked_gradient<F>(cells: usize, n_params: usize, grad: &mut [f64], f: F)
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync,
{
    let starts: Vec<usize> = (0..cells).step_by(CHUNK).collect();
    let partials: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut g = vec![0.0; n_params];
            f(s..(s + CHUNK).min(cells), &mut g);
            g
        })
        .collect();
    for p in partials {
        for (g, v) in grad.iter_mut().zip(p) {
            *g += v;
        }
    }
}

/// Loss of a model against a fixed target, with an optional template over the leading
/// parameters.
pub struct Objective<'a, M> {
    pub model: M,
    pub target: &'a ScalarField<f64>,
    pub template: Option<Vec<f64>>,
    pub loss: LossConfig,
    gamma: f64,
}

impl<'a, M: Model> Objective<'a, M> {
    pub fn new(model: M, target: &'a ScalarField<f64>, template: Option<Vec<f64>>, loss: LossConfig) -> Result<Self> {
        loss.validate()?;
        if let Some(t) = &template {
            if t.len() > model.param_len() {
                return Err(Error::LengthMismatch {
                    expected: model.param_len(),
                    actual: t.len(),
                });
            }
        }
        if target.grid().dims().iter().any(|&d| d < 3) {
            return Err(Error::invalid("target grid needs at least 3 cells per axis"));
        }
        let gamma = loss.gamma_for(target);
        Ok(Objective {
            model,
            target,
            template,
            loss,
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn check_len(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.model.param_len() {
            return Err(Error::LengthMismatch {
                expected: self.model.param_len(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    /// The predicted field and its per-cell arg indices.
    pub fn predict(&self, params: &[f64]) -> (ScalarField<f64>, Vec<u32>) {
        let grid = self.target.grid();
        let mut values = vec![0.0; grid.len()];
        let mut arg = vec![0u32; grid.len()];
        self.model.evaluate(params, grid, &mut values, &mut arg);
        (ScalarField::new(grid.clone(), values).expect("grid-sized buffer"), arg)
    }

    fn template_term(&self, params: &[f64], t: usize) -> f64 {
        match &self.template {
            Some(tp) => template_loss(&params[..tp.len()], tp, t, &self.loss).expect("checked length"),
            None => 0.0,
        }
    }

    /// Loss breakdown at iteration `t`.
    pub fn loss(&self, params: &[f64], t: usize) -> Result<LossBreakdown> {
        self.check_len(params)?;
        let (pred, _) = self.predict(params);
        let surface = surface_loss(&pred, self.target, self.gamma)?;
        let align = align_loss(&pred, self.target)?;
        Ok(LossBreakdown::assemble(
            surface,
            align,
            self.template_term(params, t),
            self.loss.alpha_align,
        ))
    }

    /// Loss and gradient of the total at iteration `t`.
    pub fn gradient(&self, params: &[f64], t: usize, mode: GradientMode, fd_step: f64) -> Result<(LossBreakdown, Vec<f64>)> {
        self.check_len(params)?;
        match mode {
            GradientMode::Analytic => {
                let (pred, arg) = self.predict(params);
                let mut adj = vec![0.0; pred.values().len()];
                let surface = surface_loss_adjoint(&pred, self.target, self.gamma, 1.0, &mut adj)?;
                let align = align_loss_adjoint(&pred, self.target, self.loss.alpha_align, &mut adj)?;
                let lb = LossBreakdown::assemble(surface, align, self.template_term(params, t), self.loss.alpha_align);
                let mut grad = vec![0.0; params.len()];
                self.model.backprop(params, self.target.grid(), &adj, &arg, &mut grad);
                if let Some(tp) = &self.template {
                    template_loss_gradient(&params[..tp.len()], tp, t, &self.loss, &mut grad[..tp.len()]);
                }
                Ok((lb, grad))
            }
            GradientMode::ForwardDifference => {
                let lb = self.loss(params, t)?;
                let mut p = params.to_vec();
                let mut grad = vec![0.0; params.len()];
                for j in 0..params.len() {
                    p[j] = params[j] + fd_step;
                    grad[j] = (self.loss(&p, t)?.total - lb.total) / fd_step;
                    p[j] = params[j];
                }
                Ok((lb, grad))
            }
        }
    }

    /// Centered-difference gradient of the total, for cross-checks.
    pub fn centered_gradient(&self, params: &[f64], t: usize, h: f64) -> Result<Vec<f64>> {
        self.check_len(params)?;
        let mut p = params.to_vec();
        let mut grad = vec![0.0; params.len()];
        for j in 0..params.len() {
            p[j] = params[j] + h;
            let up = self.loss(&p, t)?.total;
            p[j] = params[j] - h;
            let down = self.loss(&p, t)?.total;
            p[j] = params[j];
            grad[j] = (up - down) / (2.0 * h);
        }
        Ok(grad)
    }
}

/// Adam on the objective from `init`; returns the best iterate and the report.
pub fn optimize<M: Model>(
    objective: &Objective<'_, M>,
    init: Vec<f64>,
    cfg: &FitConfig,
    mut progress: Option<Progress<'_>>,
) -> Result<FitReport> {
    cfg.validate()?;
    objective.check_len(&init)?;
    let start = Instant::now();
    let surface_floor = surface_loss(objective.target, objective.target, objective.gamma)?;
    let mut params = init;
    objective.model.project(&mut params);
    let mut adam = Adam::new(cfg.adam, params.len());
    let mut history = Vec::with_capacity(cfg.max_iters);
    let mut best = (f64::INFINITY, 0usize, LossBreakdown::default(), params.clone());
    let mut termination = Termination::MaxIterations;

    for t in 0..cfg.max_iters {
        let (lb, grad) = objective.gradient(&params, t, cfg.gradient, cfg.fd_step)?;
        if !lb.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                iteration: t,
                detail: format!("{lb:?}"),
            });
        }
        history.push(lb);
        if let Some(cb) = progress.as_mut() {
            cb(t, &lb);
        }
        if lb.total < best.0 {
            best = (lb.total, t, lb, params.clone());
        } else if let Some(p) = cfg.patience {
            if t - best.1 >= p {
                termination = Termination::Stalled;
                break;
            }
        }
        if t + 1 == cfg.max_iters {
            break;
        }
        let lr = cfg.schedule.rate(cfg.learning_rate, t, cfg.max_iters);
        adam.step(&mut params, &grad, lr);
        objective.model.project(&mut params);
    }

    Ok(FitReport {
        history,
        best_iteration: best.1,
        best: best.2,
        final_params: best.3,
        surface_floor,
        termination,
        wall_time: start.elapsed(),
    })
}
