use sdfit::field::evaluate_3d;
use sdfit::fit::{fit2d, fit3d, target_from_curves, unit_cube_grid, FitConfig, Fit3dMode, Shape3d, Termination};
use sdfit::geometry3d::Cuboid;
use sdfit::template::{make_simple_template, Template, TemplateLibrary};
use sdfit::vector::vec3;
use sdfit::Error;

fn small(iters: usize) -> FitConfig {
    FitConfig {
        max_iters: iters,
        grid_dims_2d: [40, 40],
        grid_dims_3d: [20, 20, 20],
        ..FitConfig::default()
    }
}

fn letter(label: &str) -> Template {
    TemplateLibrary::builtin().get(label).unwrap().clone()
}

/// The template's own curves, shifted so the fit has somewhere to go.
fn shifted_target(t: &Template, dx: f64, n: usize) -> sdfit::Field {
    let moved: Vec<f64> = t.params().chunks(2).flat_map(|p| [p[0] + dx, p[1]]).collect();
    target_from_curves(&sdfit::template::unpack(t, &moved).unwrap(), n).unwrap()
}

#[test]
fn fits_are_deterministic() {
    let t = letter("L");
    let target = shifted_target(&t, 0.03, 40);
    let cfg = small(30);
    let (a, ra) = fit2d(&target, &t, &cfg, None).unwrap();
    let (b, rb) = fit2d(&target, &t, &cfg, None).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a, b);
}

#[test]
fn null_fit_starts_at_the_floor_and_never_gets_worse() {
    let t = make_simple_template(1).unwrap();
    let target = target_from_curves(&t.to_curve_set(), 48).unwrap();
    let (_, r) = fit2d(&target, &t, &small(40), None).unwrap();
    let first = r.history[0];
    assert!((first.surface - r.surface_floor).abs() <= 1e-12 * r.surface_floor.max(1e-300));
    assert_eq!(first.template, 0.0);
    assert!(r.best.total <= first.total);
    assert!(r.best.surface <= 1.05 * r.surface_floor);
    assert_eq!(r.final_params.len(), t.vector_len(false));
}

#[test]
fn shifted_target_reduces_the_loss() {
    let t = letter("L");
    let target = shifted_target(&t, 0.05, 40);
    // Without the template prior the whole glyph is free to follow the shift.
    let mut cfg = small(400);
    cfg.loss.alpha_template = 0.0;
    let (_, r) = fit2d(&target, &t, &cfg, None).unwrap();
    let excess = |s: f64| s - r.surface_floor;
    assert!(excess(r.best.surface) < 0.1 * excess(r.history[0].surface), "{} vs {} (floor {})", r.best.surface, r.history[0].surface, r.surface_floor);
    assert_eq!(r.best, r.history[r.best_iteration]);
    let best = r.best_so_far();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn patience_stops_a_stalled_fit() {
    let t = make_simple_template(1).unwrap();
    let target = target_from_curves(&t.to_curve_set(), 40).unwrap();
    let cfg = FitConfig {
        patience: Some(5),
        ..small(500)
    };
    let (_, r) = fit2d(&target, &t, &cfg, None).unwrap();
    assert_eq!(r.termination, Termination::Stalled);
    assert!(r.history.len() < 500);
    assert_eq!(r.history.len() - 1 - r.best_iteration, 5);
}

#[test]
fn progress_sees_every_iteration() {
    let t = letter("O");
    let target = shifted_target(&t, 0.02, 40);
    let mut seen = Vec::new();
    let mut cb = |i: usize, l: &sdfit::loss::LossBreakdown| seen.push((i, l.total));
    let (_, r) = fit2d(&target, &t, &small(12), Some(&mut cb)).unwrap();
    assert_eq!(seen.len(), 12);
    assert!(seen.iter().enumerate().all(|(k, &(i, total))| k == i && total == r.history[i].total));
}

#[test]
fn non_finite_targets_fail_with_the_iteration() {
    let t = make_simple_template(1).unwrap();
    let mut target = target_from_curves(&t.to_curve_set(), 32).unwrap();
    target.values_mut()[100] = f64::NAN;
    match fit2d(&target, &t, &small(10), None) {
        Err(Error::NonFinite { iteration, .. }) => assert_eq!(iteration, 0),
        other => panic!("expected NonFinite, got {other:?}"),
    }
}

#[test]
fn thickness_adds_one_parameter_per_curve() {
    let t = letter("I");
    let target = shifted_target(&t, 0.0, 40);
    let cfg = FitConfig {
        thickness_enabled: true,
        ..small(20)
    };
    let (shape, r) = fit2d(&target, &t, &cfg, None).unwrap();
    assert_eq!(r.final_params.len(), t.vector_len(true));
    assert_eq!(r.final_params.len(), 2 * t.point_count() + t.curve_count());
    assert!(r.final_params[2 * t.point_count()..].iter().all(|&s| s >= 0.0));
    assert_eq!(shape.curves().count(), t.curve_count());
}

#[test]
fn bad_inputs_are_rejected() {
    let t = make_simple_template(1).unwrap();
    let cube = evaluate_3d(&unit_cube_grid(8).unwrap(), |p| p.norm() - 0.5);
    assert!(matches!(fit2d(&cube, &t, &small(5), None), Err(Error::GridMismatch(_))));
    let flat = target_from_curves(&t.to_curve_set(), 16).unwrap();
    assert!(matches!(fit3d(&flat, 2, Fit3dMode::Cuboid, &small(5), None), Err(Error::GridMismatch(_))));
    assert!(fit3d(&cube, 1, Fit3dMode::Csg, &small(5), None).is_err());
    assert!(fit3d(&cube, 0, Fit3dMode::Cuboid, &small(5), None).is_err());
    let zero_iters = FitConfig { max_iters: 0, ..small(5) };
    assert!(matches!(fit2d(&flat, &t, &zero_iters, None), Err(Error::InvalidArgument(_))));
}

#[test]
fn box_fit_improves_and_prunes_into_a_union() {
    let truth = Cuboid::axis_aligned(vec3(0.5, 0.3, 0.4), vec3(0.1, -0.1, 0.0)).unwrap();
    let target = evaluate_3d(&unit_cube_grid(20).unwrap(), |p| truth.sdf(p));
    let cfg = small(120);
    let (shape, r) = fit3d(&target, 4, Fit3dMode::Cuboid, &cfg, None).unwrap();
    assert!(r.best.total < 0.5 * r.history[0].total);
    assert_eq!(r.best.template, 0.0);
    let Shape3d::Primitives(set) = shape else { panic!("cuboid mode returns a union") };
    assert!((1..=4).contains(&set.primitives.len()));
    assert!(set.primitives.iter().all(|p| p.radius == 0.0));
}

#[test]
fn csg_mode_splits_the_primitives() {
    let target = evaluate_3d(&unit_cube_grid(16).unwrap(), |p| p.norm() - 0.6);
    let (shape, r) = fit3d(&target, 5, Fit3dMode::Csg, &small(10), None).unwrap();
    let Shape3d::Csg(csg) = shape else { panic!("CSG mode returns a CSG shape") };
    assert_eq!((csg.positive.len(), csg.negative.len()), (3, 2));
    assert_eq!(r.history.len(), 10);
}
