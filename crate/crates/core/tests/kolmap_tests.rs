//! End-to-end pipeline: cover the boundary, merge, and verify the
//! near-identity map and its reports.

use gstrip_core::geom::{BoundingBox, Point, SampleStream};
use gstrip_core::kolmap::{
    apply_map, ball_shrink_constant, build_boundary_cover, run_pipeline, unit_ball_volume,
    verify_lipschitz, verify_measure_loss, CoverStrategy, PipelineConfig,
};
use gstrip_core::polyfun::Tolerances;
use gstrip_core::setlib::{make_radial, make_square};

#[test]
fn square_cover_uses_four_slabs() {
    let sq = make_square();
    let cfg = PipelineConfig::new(0.1, CoverStrategy::GridLines);
    let cover = build_boundary_cover(&sq, &cfg).unwrap();
    assert_eq!(cover.strips.len(), 4);
    assert_eq!(cover.violations, 0);
    assert!(cover.total_width_bound < 0.2);
    // Each slab gets an equal share of the budget.
    let w = cover.strips[0].width_bound();
    assert!((w - 0.199 / 4.0).abs() <= 1e-12, "width {w}");
}

#[test]
fn square_pipeline_full_report() {
    let sq = make_square();
    let mut cfg = PipelineConfig::new(0.1, CoverStrategy::GridLines);
    cfg.verify_samples = 2000;
    cfg.area_samples = 40_000;
    let (strip, report) = run_pipeline(&sq, &cfg).unwrap();

    assert!(report.lip_bound <= 0.1);
    assert!(report.max_displacement <= report.lip_bound + 1e-9);
    assert_eq!(report.lipschitz_pair_violations, 0);
    assert_eq!(report.cover_violations, 0);
    assert!(report.flatten_residual <= 1e-7, "residual {}", report.flatten_residual);
    assert_eq!(report.translation_violations, 0);
    assert!(report.bound_check, "loss {} bound {}", report.loss_estimate, report.loss_bound);
    assert!(strip.width_bound() <= 0.2);

    // The merged function for four axis slabs stays small.
    assert!(strip.func().piece_count() <= 16);
}

#[test]
fn pipeline_is_deterministic() {
    let sq = make_square();
    let mut cfg = PipelineConfig::new(0.1, CoverStrategy::GridLines);
    cfg.verify_samples = 500;
    cfg.area_samples = 10_000;
    let (_, a) = run_pipeline(&sq, &cfg).unwrap();
    let (_, b) = run_pipeline(&sq, &cfg).unwrap();
    assert_eq!(a.max_displacement.to_bits(), b.max_displacement.to_bits());
    assert_eq!(a.flatten_residual.to_bits(), b.flatten_residual.to_bits());
    assert_eq!(a.area_before.0.to_bits(), b.area_before.0.to_bits());
    assert_eq!(a.image_area.to_bits(), b.image_area.to_bits());
}

#[test]
fn radial_budget_infeasible_states_minimum() {
    // Shell lengths already cost 2 * 0.3 = 0.6 of width; eps 0.2 only
    // grants 0.4: infeasible, and the message names the threshold.
    let shells = make_radial(&[(0.5, 0.7), (1.0, 1.1)]).unwrap();
    let cfg = PipelineConfig::new(0.2, CoverStrategy::Radial);
    let err = build_boundary_cover(&shells, &cfg).unwrap_err();
    match err {
        gstrip_core::Error::Budget(msg) => {
            assert!(msg.contains("minimum achievable"), "{msg}");
        }
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn radial_cover_within_budget_passes() {
    let shells = make_radial(&[(0.5, 0.55), (1.0, 1.02)]).unwrap();
    let cfg = PipelineConfig::new(0.1, CoverStrategy::Radial);
    let cover = build_boundary_cover(&shells, &cfg).unwrap();
    assert_eq!(cover.violations, 0);
    assert!(cover.total_width_bound < 0.2);
}

#[test]
fn external_strategy_requires_strips() {
    let sq = make_square();
    let cfg = PipelineConfig::new(0.1, CoverStrategy::External);
    assert!(build_boundary_cover(&sq, &cfg).is_err());
}

#[test]
fn mismatched_strategy_is_rejected() {
    let sq = make_square();
    let cfg = PipelineConfig::new(0.1, CoverStrategy::Radial);
    assert!(build_boundary_cover(&sq, &cfg).is_err());
}

#[test]
fn corrupted_map_fails_lipschitz_check() {
    // Scaling by 1.5 violates 1-Lipschitz massively; the checker must
    // report violations rather than pass silently.
    let expanding = |x: &Point| Ok(*x * 1.5);
    let domain = BoundingBox::new(Point::xy(-1.0, -1.0), Point::xy(1.0, 1.0)).unwrap();
    let mut stream = SampleStream::new(91);
    let violations = verify_lipschitz(&expanding, &domain, 200, &mut stream).unwrap();
    assert!(violations > 0);

    let identity = |x: &Point| Ok(*x);
    let mut stream = SampleStream::new(92);
    let violations = verify_lipschitz(&identity, &domain, 200, &mut stream).unwrap();
    assert_eq!(violations, 0);
}

#[test]
fn measure_loss_requires_fine_raster() {
    let sq = make_square();
    let identity = |x: &Point| Ok(*x);
    let mut stream = SampleStream::new(93);
    // 100 samples make the raster cell far coarser than lip / 2 = 0.005.
    let err = verify_measure_loss(&sq, &identity, 0.01, 2.0, 100, &mut stream).unwrap_err();
    assert!(matches!(err, gstrip_core::Error::Precondition(_)), "{err:?}");
}

#[test]
fn measure_loss_of_identity_is_small() {
    let sq = make_square();
    let identity = |x: &Point| Ok(*x);
    let mut stream = SampleStream::new(94);
    let loss = verify_measure_loss(&sq, &identity, 0.0, 2.0, 100_000, &mut stream).unwrap();
    assert!(loss.loss_estimate.abs() <= 0.05, "loss {}", loss.loss_estimate);
    assert!(loss.bound_check);
}

#[test]
fn shrink_constants_reference_values() {
    use std::f64::consts::PI;
    assert_eq!(unit_ball_volume(1), 2.0);
    assert_eq!(unit_ball_volume(2), PI);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() <= 1e-15);
    assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() <= 1e-15);
    // C(d, r) = d * omega_d * r^(d-1): the surface area of the radius-r
    // ball, the rate at which shaving a width-w shell removes volume.
    assert!((ball_shrink_constant(2, 3.0) - 2.0 * PI * 3.0).abs() <= 1e-12);
    assert!((ball_shrink_constant(3, 2.0) - 4.0 * PI * 4.0).abs() <= 1e-12);
    assert_eq!(ball_shrink_constant(1, 5.0), 2.0);
}

#[test]
fn apply_map_moves_points_into_planes() {
    let sq = make_square();
    let mut cfg = PipelineConfig::new(0.1, CoverStrategy::GridLines);
    cfg.verify_samples = 200;
    cfg.area_samples = 10_000;
    let (strip, _) = run_pipeline(&sq, &cfg).unwrap();
    let tol = Tolerances::default();
    // A point just outside the bottom edge slab moves straight down onto a
    // piece-equality plane; displacement is bounded by lip.
    let x = Point::xy(0.5, 0.03);
    let y = apply_map(&strip, &x, &tol).unwrap();
    assert!(y.dist(&x) <= strip.func().lip() + 1e-9);
}
