//! Greedy removal of primitives that are mostly covered by the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry3d::RoundedCuboid;
use crate::vector::{vec3, Vec3};

/// Volume samples drawn inside each primitive.
pub const PRUNE_SAMPLES: usize = 10_000;
const MAX_DRAWS: usize = 100 * PRUNE_SAMPLES;

fn samples_inside(p: &RoundedCuboid<f64>, rng: &mut ChaCha8Rng) -> Vec<Vec3<f64>> {
    let e = p.cuboid.half_extents + Vec3::splat(p.radius);
    let mut out = Vec::with_capacity(PRUNE_SAMPLES);
    for _ in 0..MAX_DRAWS {
        if out.len() == PRUNE_SAMPLES {
            break;
        }
        let local = vec3(
            rng.gen_range(-e.x..=e.x),
            rng.gen_range(-e.y..=e.y),
            rng.gen_range(-e.z..=e.z),
        );
        let world = p.cuboid.to_world(local);
        if p.sdf(world) <= 0.0 {
            out.push(world);
        }
    }
    out
}

/// Repeatedly drops the most-covered primitive while the fraction of its volume inside the
/// union of the remaining ones exceeds `threshold`.
pub fn prune_overlapping(primitives: &[RoundedCuboid<f64>], threshold: f64, seed: u64) -> Vec<RoundedCuboid<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<Vec3<f64>>> = primitives.iter().map(|p| samples_inside(p, &mut rng)).collect();
    let mut alive: Vec<usize> = (0..primitives.len()).collect();
    while alive.len() > 1 {
        let mut worst: Option<(f64, usize)> = None;
        for (slot, &i) in alive.iter().enumerate() {
            if samples[i].is_empty() {
                continue;
            }
            let covered = samples[i]
                .iter()
                .filter(|&&p| alive.iter().any(|&j| j != i && primitives[j].sdf(p) <= 0.0))
                .count();
            let frac = covered as f64 / samples[i].len() as f64;
            // Ties go to the later primitive so the earliest duplicate survives.
            if worst.map_or(true, |(w, _)| frac >= w) {
                worst = Some((frac, slot));
            }
        }
        match worst {
            Some((frac, slot)) if frac > threshold => {
                alive.remove(slot);
            }
            _ => break,
        }
    }
    alive.into_iter().map(|i| primitives[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry3d::Cuboid;

    fn boxed(b: f64, t: Vec3<f64>) -> RoundedCuboid<f64> {
        RoundedCuboid::sharp(Cuboid::axis_aligned(Vec3::splat(b), t).unwrap())
    }

    #[test]
    fn identical_pair_keeps_one() {
        let c = boxed(0.3, vec3(0.0, 0.0, 0.0));
        assert_eq!(prune_overlapping(&[c, c], 0.8, 1), vec![c]);
    }

    #[test]
    fn disjoint_pair_survives() {
        let a = boxed(0.3, vec3(-0.5, 0.0, 0.0));
        let b = boxed(0.3, vec3(0.5, 0.0, 0.0));
        assert_eq!(prune_overlapping(&[a, b], 0.8, 1).len(), 2);
    }

    #[test]
    fn contained_box_is_removed() {
        let outer = boxed(0.5, vec3(0.0, 0.0, 0.0));
        let inner = boxed(0.2, vec3(0.1, 0.0, -0.1));
        assert_eq!(prune_overlapping(&[inner, outer], 0.8, 7), vec![outer]);
        assert_eq!(prune_overlapping(&[outer, inner], 0.8, 7), vec![outer]);
    }

    #[test]
    fn threshold_one_keeps_everything() {
        let c = boxed(0.3, vec3(0.0, 0.0, 0.0));
        assert_eq!(prune_overlapping(&[c, c], 1.0, 1).len(), 2);
    }
}
