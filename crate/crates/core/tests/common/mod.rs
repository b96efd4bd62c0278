//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sdfit::field::{evaluate_3d, Outline, ScalarField};
use sdfit::fit::unit_cube_grid;
use sdfit::geometry2d::QuadraticBezier;
use sdfit::geometry3d::Cuboid;
use sdfit::template::Template;
use sdfit::vector::{vec2, vec3, Quaternion, Vec2, Vec3};

pub type Mat3 = [[f64; 3]; 3];

/// Closest distance by scanning `samples` equally spaced parameters in [0, 1].
pub fn bezier_scan_distance(curve: &QuadraticBezier<f64>, p: Vec2<f64>, samples: usize) -> f64 {
    // Power basis: B(t) = a + t (2(b - a)) + t² (a - 2b + c), shifted by p.
    let (ax, ay) = (curve.a.x - p.x, curve.a.y - p.y);
    let (bx, by) = (2.0 * (curve.b.x - curve.a.x), 2.0 * (curve.b.y - curve.a.y));
    let (cx, cy) = (
        curve.a.x - 2.0 * curve.b.x + curve.c.x,
        curve.a.y - 2.0 * curve.b.y + curve.c.y,
    );
    let step = 1.0 / (samples - 1) as f64;
    let mut best = f64::INFINITY;
    for k in 0..samples {
        let t = k as f64 * step;
        let x = ax + t * (bx + t * cx);
        let y = ay + t * (by + t * cy);
        best = best.min(x * x + y * y);
    }
    best.sqrt()
}

/// Distance to a segment by clamped projection.
pub fn segment_distance(p: Vec2<f64>, a: Vec2<f64>, b: Vec2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Rotation matrix of a (not necessarily unit) quaternion; columns are the rotated axes.
pub fn quat_matrix(q: Quaternion<f64>) -> Mat3 {
    let [w, x, y, z] = q.to_array();
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn column(m: &Mat3, j: usize) -> [f64; 3] {
    [m[0][j], m[1][j], m[2][j]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The 24 rotations mapping a box onto itself, as (axis permutation, axis signs).
pub fn box_symmetries() -> Vec<([usize; 3], [f64; 3])> {
    let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
    let mut out = Vec::with_capacity(24);
    for (pi, perm) in perms.iter().enumerate() {
        let parity = if pi < 3 { 1.0 } else { -1.0 };
        for bits in 0..8 {
            let s = [
                if bits & 1 == 0 { 1.0 } else { -1.0 },
                if bits & 2 == 0 { 1.0 } else { -1.0 },
                if bits & 4 == 0 { 1.0 } else { -1.0 },
            ];
            if s[0] * s[1] * s[2] * parity > 0.0 {
                out.push((*perm, s));
            }
        }
    }
    out
}

/// Smallest rotation angle (degrees) between two boxes over the box symmetry group, with the
/// fitted half-extents reordered to match.
pub fn box_rotation_error(fit: &Cuboid<f64>, truth: &Cuboid<f64>) -> (f64, [f64; 3]) {
    let rf = quat_matrix(fit.rotation);
    let rt = quat_matrix(truth.rotation);
    let ef = fit.half_extents.to_array();
    let mut best = (f64::INFINITY, ef);
    for (perm, sign) in box_symmetries() {
        // Column i of the re-labelled fit frame is sign_i · fit axis perm_i.
        let mut trace = 0.0;
        for i in 0..3 {
            let col = column(&rf, perm[i]);
            trace += sign[i] * dot3(col, column(&rt, i));
        }
        let angle = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
        if angle < best.0 {
            best = (angle, [ef[perm[0]], ef[perm[1]], ef[perm[2]]]);
        }
    }
    best
}

fn local_coords(m: &Mat3, t: Vec3<f64>, p: Vec3<f64>) -> [f64; 3] {
    let d = [p.x - t.x, p.y - t.y, p.z - t.z];
    [dot3(column(m, 0), d), dot3(column(m, 1), d), dot3(column(m, 2), d)]
}

/// Squared distance from `x` to the lattice `{-e + 2e·l/(m-1)}`.
fn lattice_gap_sq(x: f64, e: f64, m: usize) -> f64 {
    let step = 2.0 * e / (m - 1) as f64;
    let mut best = f64::INFINITY;
    for l in 0..m {
        let d = x - (-e + step * l as f64);
        best = best.min(d * d);
    }
    best
}

/// Signed distance from surface samples: each face carries an `m × m` lattice (edges included);
/// the nearest lattice point of a product lattice splits per face axis. Inside means all local
/// coordinates lie within the half-extents.
pub fn cuboid_sampled_sdf(c: &Cuboid<f64>, p: Vec3<f64>, m: usize) -> f64 {
    let rot = quat_matrix(c.rotation);
    let x = local_coords(&rot, c.translation, p);
    let e = c.half_extents.to_array();
    let mut best = f64::INFINITY;
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let lateral = lattice_gap_sq(x[i], e[i], m) + lattice_gap_sq(x[j], e[j], m);
        for s in [-1.0, 1.0] {
            let n = x[k] - s * e[k];
            best = best.min(n * n + lateral);
        }
    }
    let d = best.sqrt();
    let inside = (0..3).all(|k| x[k].abs() < e[k]);
    if inside {
        -d
    } else {
        d
    }
}

/// Uniformly random rotation: a rejection-sampled point of the unit 4-ball, normalized.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Quaternion<f64> {
    loop {
        let v: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return Quaternion::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n);
        }
    }
}

pub fn random_cuboid(rng: &mut ChaCha8Rng) -> Cuboid<f64> {
    let e = vec3(rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5));
    let t = vec3(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    Cuboid::new(e, t, random_rotation(rng)).unwrap()
}

/// Occupancy IoU of two cuboids on an `n³` cell-centered voxel grid over [-1, 1]³.
pub fn voxel_iou(a: &Cuboid<f64>, b: &Cuboid<f64>, n: usize) -> f64 {
    let (ra, rb) = (quat_matrix(a.rotation), quat_matrix(b.rotation));
    let (ea, eb) = (a.half_extents.to_array(), b.half_extents.to_array());
    let inside = |m: &Mat3, t: Vec3<f64>, e: &[f64; 3], p: Vec3<f64>| {
        let x = local_coords(m, t, p);
        (0..3).all(|k| x[k].abs() <= e[k])
    };
    let h = 2.0 / n as f64;
    let (mut inter, mut union) = (0usize, 0usize);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let p = vec3(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h, -1.0 + (k as f64 + 0.5) * h);
                let ia = inside(&ra, a.translation, &ea, p);
                let ib = inside(&rb, b.translation, &eb, p);
                inter += (ia && ib) as usize;
                union += (ia || ib) as usize;
            }
        }
    }
    inter as f64 / union.max(1) as f64
}

/// Six outward-bulging curves around (0.45, 0.45) meeting at corners, so every control point is
/// pinned by the geometry.
pub fn scallop_template() -> Template {
    let n = 6;
    let pts = (0..2 * n)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / n as f64;
            let r = if k % 2 == 0 { 0.25 } else { 0.42 };
            vec2(0.45 + r * a.cos(), 0.45 + r * a.sin())
        })
        .collect();
    Template::from_loops("scallop", vec![pts]).unwrap()
}

pub fn translated(params: &[f64], dx: f64, dy: f64) -> Vec<f64> {
    params.chunks(2).flat_map(|p| [p[0] + dx, p[1] + dy]).collect()
}

/// Largest control-point displacement between two packed point vectors.
pub fn max_point_error(a: &[f64], b: &[f64]) -> f64 {
    a.chunks(2)
        .zip(b.chunks(2))
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Block 'L' inside the em box.
pub fn l_outline() -> Outline<f64> {
    let l = vec![
        vec2(0.2, 0.1),
        vec2(0.4, 0.1),
        vec2(0.4, 0.7),
        vec2(0.8, 0.7),
        vec2(0.8, 0.9),
        vec2(0.2, 0.9),
    ];
    Outline::from_loops(&[l])
}

pub fn hollow_box() -> (Cuboid<f64>, Cuboid<f64>) {
    (
        Cuboid::axis_aligned(vec3(0.6, 0.5, 0.5), vec3(0.0, 0.0, 0.0)).unwrap(),
        Cuboid::axis_aligned(vec3(0.4, 0.3, 0.3), vec3(0.0, 0.0, 0.0)).unwrap(),
    )
}

pub fn hollow_box_target(n: usize) -> ScalarField<f64> {
    let (outer, inner) = hollow_box();
    evaluate_3d(&unit_cube_grid(n).unwrap(), |p| outer.sdf(p).max(-inner.sdf(p)))
}
