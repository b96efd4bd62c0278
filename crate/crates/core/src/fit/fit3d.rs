//! Fitting unions of (rounded) cuboids, or a union-minus-union CSG shape, to 3D fields.
//!
//! Each primitive is stored unconstrained as
//! `[softplus⁻¹(b) ×3, t ×3, q (w, x, y, z), softplus⁻¹(r)?]`; the rotation is normalized
//! whenever it is decoded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chunked_gradient, optimize, prune_overlapping, FitConfig, FitReport, Model, Objective, Progress, CHUNK};
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::geometry3d::{CsgShape, Cuboid, PrimitiveSet, RoundedCuboid};
use crate::vector::{vec3, Quaternion, Vec3};

/// Initialization jitter half-width for translations and rotation vector parts.
pub const INIT_JITTER: f64 = 0.05;
const INIT_RADIUS: f64 = 0.01;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit3dMode {
    Cuboid,
    Rounded,
    /// Half the primitives are unioned, the other half subtracted.
    Csg,
}

impl std::str::FromStr for Fit3dMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cuboid" => Ok(Fit3dMode::Cuboid),
            "rounded" => Ok(Fit3dMode::Rounded),
            "csg" => Ok(Fit3dMode::Csg),
            other => Err(Error::invalid(format!("unknown 3D mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape3d {
    Primitives(PrimitiveSet<f64>),
    Csg(CsgShape<f64>),
}

impl Shape3d {
    pub fn sdf(&self, p: Vec3<f64>) -> f64 {
        match self {
            Shape3d::Primitives(s) => s.sdf(p),
            Shape3d::Csg(s) => s.sdf(p),
        }
    }
}

/// Cell-centered `n³` grid over `[−1, 1]³`.
pub fn unit_cube_grid(n: usize) -> Result<GridSpec<f64>> {
    GridSpec::cube(n, -1.0, 1.0)
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// A decoded primitive with its world-from-local rotation matrix.
struct Prepared {
    cuboid: Cuboid<f64>,
    radius: f64,
    rot: [[f64; 3]; 3],
}

impl Prepared {
    #[inline]
    fn sdf(&self, p: Vec3<f64>) -> f64 {
        let v = p - self.cuboid.translation;
        let r = &self.rot;
        // local = Rᵀ v
        let lx = r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z;
        let ly = r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z;
        let lz = r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z;
        let b = self.cuboid.half_extents;
        let d = vec3(lx.abs() - b.x, ly.abs() - b.y, lz.abs() - b.z);
        d.max_scalar(0.0).norm() + d.max_elem().min(0.0) - self.radius
    }
}

fn rotation_matrix(q: Quaternion<f64>) -> [[f64; 3]; 3] {
    let Quaternion { w, x, y, z } = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// `n_pos` unioned primitives minus `n_neg` subtracted ones.
#[derive(Clone, Debug)]
pub struct BoxModel {
    pub n_pos: usize,
    pub n_neg: usize,
    pub rounded: bool,
    /// Compare `|sdf|` against an unsigned target.
    pub unsigned: bool,
}

impl BoxModel {
    pub fn stride(&self) -> usize {
        if self.rounded {
            11
        } else {
            10
        }
    }

    fn decode_one(&self, p: &[f64]) -> (Cuboid<f64>, f64) {
        let q = Quaternion::new(p[6], p[7], p[8], p[9]);
        let n = q.norm();
        let q = if n > 0.0 { q.normalized() } else { Quaternion::identity() };
        let cuboid = Cuboid {
            half_extents: vec3(softplus(p[0]), softplus(p[1]), softplus(p[2])),
            translation: vec3(p[3], p[4], p[5]),
            rotation: q,
        };
        let radius = if self.rounded { softplus(p[10]) } else { 0.0 };
        (cuboid, radius)
    }

    fn prepared(&self, params: &[f64]) -> Vec<Prepared> {
        params
            .chunks(self.stride())
            .map(|p| {
                let (cuboid, radius) = self.decode_one(p);
                Prepared {
                    rot: rotation_matrix(cuboid.rotation),
                    cuboid,
                    radius,
                }
            })
            .collect()
    }

    /// Decoded primitives: positive parts, then negative parts.
    pub fn primitives(&self, params: &[f64]) -> (Vec<RoundedCuboid<f64>>, Vec<RoundedCuboid<f64>>) {
        let all: Vec<RoundedCuboid<f64>> = params
            .chunks(self.stride())
            .map(|p| {
                let (cuboid, radius) = self.decode_one(p);
                RoundedCuboid { cuboid, radius }
            })
            .collect();
        let neg = all[self.n_pos..].to_vec();
        let mut pos = all;
        pos.truncate(self.n_pos);
        (pos, neg)
    }

    /// Encodes a primitive into unconstrained parameters.
    pub fn encode(&self, c: &RoundedCuboid<f64>) -> Vec<f64> {
        let b = c.cuboid.half_extents;
        let t = c.cuboid.translation;
        let q = c.cuboid.rotation;
        let mut out = vec![softplus_inv(b.x), softplus_inv(b.y), softplus_inv(b.z), t.x, t.y, t.z, q.w, q.x, q.y, q.z];
        if self.rounded {
            out.push(softplus_inv(c.radius.max(1e-9)));
        }
        out
    }
}

impl Model for BoxModel {
    fn param_len(&self) -> usize {
        (self.n_pos + self.n_neg) * self.stride()
    }

    fn evaluate(&self, params: &[f64], grid: &GridSpec<f64>, values: &mut [f64], arg: &mut [u32]) {
        let prims = self.prepared(params);
        let (pos, neg) = prims.split_at(self.n_pos);
        values
            .par_chunks_mut(CHUNK)
            .zip(arg.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(chunk, (vals, args))| {
                for (k, (v, a)) in vals.iter_mut().zip(args.iter_mut()).enumerate() {
                    let p = grid.center3(chunk * CHUNK + k);
                    let mut best = f64::INFINITY;
                    let mut best_i = 0;
                    for (i, prim) in pos.iter().enumerate() {
                        let d = prim.sdf(p);
                        if d < best {
                            best = d;
                            best_i = i;
                        }
                    }
                    for (j, prim) in neg.iter().enumerate() {
                        let d = -prim.sdf(p);
                        if d > best {
                            best = d;
                            best_i = self.n_pos + j;
                        }
                    }
                    *v = if self.unsigned { best.abs() } else { best };
                    *a = best_i as u32;
                }
            });
    }

    fn backprop(&self, params: &[f64], grid: &GridSpec<f64>, adj: &[f64], arg: &[u32], grad: &mut [f64]) {
        let stride = self.stride();
        let decoded: Vec<(Cuboid<f64>, f64)> = params.chunks(stride).map(|p| self.decode_one(p)).collect();
        chunked_gradient(adj.len(), params.len(), grad, |range, g| {
            for idx in range {
                let w = adj[idx];
                if w == 0.0 {
                    continue;
                }
                let k = arg[idx] as usize;
                let (cuboid, radius) = &decoded[k];
                let p = grid.center3(idx);
                let sg = cuboid.sdf_with_grad(p);
                let mut factor = if k >= self.n_pos { -w } else { w };
                if self.unsigned {
                    let value = if k >= self.n_pos { radius - sg.value } else { sg.value - radius };
                    if value == 0.0 {
                        continue;
                    }
                    factor *= value.signum();
                }
                let raw = &params[k * stride..(k + 1) * stride];
                let out = &mut g[k * stride..(k + 1) * stride];
                let hb = sg.half_extents.to_array();
                for j in 0..3 {
                    out[j] += factor * hb[j] * sigmoid(raw[j]);
                }
                let ht = sg.translation.to_array();
                for j in 0..3 {
                    out[3 + j] += factor * ht[j];
                }
                // Through q̂ = q/|q|: (g − q̂ (q̂·g)) / |q|.
                let qn = (raw[6] * raw[6] + raw[7] * raw[7] + raw[8] * raw[8] + raw[9] * raw[9]).sqrt();
                let qh = cuboid.rotation.to_array();
                let gq = sg.rotation;
                let dot = (0..4).map(|j| qh[j] * gq[j]).sum::<f64>();
                for j in 0..4 {
                    out[6 + j] += factor * (gq[j] - qh[j] * dot) / qn;
                }
                if self.rounded {
                    out[10] -= factor * sigmoid(raw[10]);
                }
            }
        });
    }

    fn project(&self, params: &mut [f64]) {
        for p in params.chunks_mut(self.stride()) {
            let n = (p[6] * p[6] + p[7] * p[7] + p[8] * p[8] + p[9] * p[9]).sqrt();
            if n > 0.0 && n.is_finite() {
                for v in &mut p[6..10] {
                    *v /= n;
                }
            } else {
                p[6..10].copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
            }
        }
    }
}

/// Lattice counts `(nx, ny, nz)` for `n` cells: least waste, then smallest largest count, then
/// smallest sum; `z` gets the largest count.
pub fn lattice_counts(n: usize) -> [usize; 3] {
    let mut best = [1, 1, n.max(1)];
    let mut key = (usize::MAX, usize::MAX, usize::MAX);
    for nx in 1..=n {
        for ny in nx..=n {
            if nx * ny > n {
                break;
            }
            let nz = n.div_ceil(nx * ny).max(ny);
            let k = (nx * ny * nz - n, nz, nx + ny + nz);
            if k < key {
                key = k;
                best = [nx, ny, nz];
            }
        }
    }
    best
}

/// Jittered lattice of small boxes inside the central 60% of the grid's extent.
pub fn lattice_init(grid: &GridSpec<f64>, n: usize, size_factor: f64, rng: &mut ChaCha8Rng) -> Vec<RoundedCuboid<f64>> {
    let counts = lattice_counts(n);
    let o = grid.origin();
    let s = grid.spacing();
    let d = grid.dims();
    let mut center = [0.0; 3];
    let mut half = [0.0; 3];
    for k in 0..3 {
        half[k] = 0.5 * s[k] * d[k] as f64;
        center[k] = o[k] + half[k];
    }
    let mut out = Vec::with_capacity(n);
    'outer: for iz in 0..counts[2] {
        for iy in 0..counts[1] {
            for ix in 0..counts[0] {
                if out.len() == n {
                    break 'outer;
                }
                let idx = [ix, iy, iz];
                let mut t = [0.0; 3];
                let mut b = [0.0; 3];
                for k in 0..3 {
                    let span = 1.2 * half[k];
                    let cell = span / counts[k] as f64;
                    t[k] = center[k] - 0.5 * span + (idx[k] as f64 + 0.5) * cell + rng.gen_range(-INIT_JITTER..=INIT_JITTER);
                    b[k] = size_factor * cell;
                }
                let q = Quaternion::new(
                    1.0,
                    rng.gen_range(-INIT_JITTER..=INIT_JITTER),
                    rng.gen_range(-INIT_JITTER..=INIT_JITTER),
                    rng.gen_range(-INIT_JITTER..=INIT_JITTER),
                );
                let cuboid = Cuboid::new(Vec3::from_array(b), Vec3::from_array(t), q).expect("positive lattice box");
                out.push(RoundedCuboid {
                    cuboid,
                    radius: INIT_RADIUS,
                });
            }
        }
    }
    out
}

/// Fits `n_primitives` boxes to a 3D field; CSG mode splits them into unioned and subtracted
/// halves. Unioned modes are pruned for overlap afterwards.
pub fn fit3d(
    target: &ScalarField<f64>,
    n_primitives: usize,
    mode: Fit3dMode,
    cfg: &FitConfig,
    progress: Option<Progress<'_>>,
) -> Result<(Shape3d, FitReport)> {
    if target.grid().rank() != 3 {
        return Err(Error::GridMismatch(format!(
            "3D fit needs a rank-3 target, got rank {}",
            target.grid().rank()
        )));
    }
    if n_primitives == 0 || (mode == Fit3dMode::Csg && n_primitives < 2) {
        return Err(Error::invalid("need at least one primitive (two in CSG mode)"));
    }
    let (n_pos, n_neg) = match mode {
        Fit3dMode::Csg => (n_primitives - n_primitives / 2, n_primitives / 2),
        _ => (n_primitives, 0),
    };
    let model = BoxModel {
        n_pos,
        n_neg,
        rounded: mode != Fit3dMode::Cuboid,
        unsigned: !target.has_negative(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = Vec::with_capacity(model.param_len());
    for c in lattice_init(target.grid(), n_pos, 0.25, &mut rng) {
        init.extend(model.encode(&c));
    }
    if n_neg > 0 {
        for c in lattice_init(target.grid(), n_neg, 0.125, &mut rng) {
            init.extend(model.encode(&c));
        }
    }
    let objective = Objective::new(model, target, None, cfg.loss.clone())?;
    let report = optimize(&objective, init, cfg, progress)?;
    let (pos, neg) = objective.model.primitives(&report.final_params);
    let shape = match mode {
        Fit3dMode::Csg => Shape3d::Csg(CsgShape::new(pos, neg)?),
        _ => Shape3d::Primitives(PrimitiveSet::new(prune_overlapping(
            &pos,
            cfg.prune_overlap_threshold,
            cfg.seed,
        ))?),
    };
    Ok((shape, report))
}
