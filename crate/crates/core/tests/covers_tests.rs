//! Cover constructors: polyhedral approximation of convex fields, difference
//! of convex graph covers, convex neighborhood shells, surface covers, and
//! radial covers.

use gstrip_core::covers::{
    convex_neighborhood_cover, convex_polyhedral_approx, dc_graph_cover, radial_cover,
    surface_cover, ConvexBody, ScalarField,
};
use gstrip_core::geom::{AffineFunc, BoundingBox, Point, SampleStream};
use gstrip_core::polyfun::{prox, PolyhedralFunc, Tolerances};

#[test]
fn parabola_approximation_reference_gap() {
    // x^2 on (-1, 1) approximated by tangents at the net {-1/2, 0, 1/2}:
    // the uniform gap is exactly 1/4, attained at the endpoints.
    let eval = |x: &Point| x[0] * x[0];
    let grad = |x: &Point| Point::from_slice(&[2.0 * x[0]]);
    let field = ScalarField::new(&eval, 2.0).with_gradient(&grad);
    let u = BoundingBox::new(Point::from_slice(&[-1.0]), Point::from_slice(&[1.0])).unwrap();
    let g = convex_polyhedral_approx(&field, &u, 0.25, Some(0.5)).unwrap();
    assert_eq!(g.piece_count(), 3, "net should be -1/2, 0, 1/2");

    let mut sup_gap = 0.0f64;
    for i in 0..=2000 {
        let t = -1.0 + 2.0 * i as f64 / 2000.0;
        let x = Point::from_slice(&[t]);
        let gap = x[0] * x[0] - g.eval(&x).0;
        assert!(gap >= -1e-12, "approximation exceeded the function at {t}");
        sup_gap = sup_gap.max(gap);
    }
    assert!((sup_gap - 0.25).abs() <= 1e-12, "sup gap {sup_gap}");
}

#[test]
fn approximation_gap_shrinks_with_eps() {
    let eval = |x: &Point| x[0] * x[0] + 0.5 * x[1] * x[1];
    let field = ScalarField::new(&eval, 4.0);
    let u = BoundingBox::new(Point::xy(-1.0, -1.0), Point::xy(1.0, 1.0)).unwrap();
    let mut stream = SampleStream::new(31);
    for eps in [0.5, 0.1, 0.02] {
        let g = convex_polyhedral_approx(&field, &u, eps, None).unwrap();
        for _ in 0..2000 {
            let x = Point::xy(
                2.0 * stream.next_f64() - 1.0,
                2.0 * stream.next_f64() - 1.0,
            );
            let gap = eval(&x) - g.eval(&x).0;
            assert!(gap >= -1e-9, "overshoot {gap} at {x:?} (eps {eps})");
            assert!(gap <= eps + 1e-9, "gap {gap} exceeds eps {eps} at {x:?}");
        }
    }
}

#[test]
fn nonconvex_field_is_rejected() {
    let eval = |x: &Point| -(x[0] * x[0]);
    let field = ScalarField::new(&eval, 2.0);
    let u = BoundingBox::new(Point::from_slice(&[-1.0]), Point::from_slice(&[1.0])).unwrap();
    assert!(convex_polyhedral_approx(&field, &u, 0.1, None).is_err());
}

#[test]
fn dc_cover_of_zero_graph_is_flat_slab() {
    // g = h = 0 on the line: the cover function is 0.2 |y| for eps = 0.1,
    // whose strip is exactly the slab |y| <= 0.2.
    let g = PolyhedralFunc::zero(1);
    let h = PolyhedralFunc::zero(1);
    let strip = dc_graph_cover(&g, &h, 0.1).unwrap();
    assert_eq!(strip.dim(), 2);
    assert!(strip.width_bound() <= 0.8 + 1e-12);

    let f = strip.func();
    // Two pieces: +/- 0.2 in y after simplification.
    assert_eq!(f.piece_count(), 2);
    let tol = Tolerances::default();
    for &(y, want) in &[
        (-0.25, false),
        (-0.2 + 1e-9, true),
        (0.0, true),
        (0.2 - 1e-9, true),
        (0.25, false),
    ] {
        let x = Point::xy(0.4, y);
        assert_eq!(strip.member(&x, &tol).unwrap(), want, "at y = {y}");
    }
}

#[test]
fn dc_cover_contains_graph_band() {
    // g(x) = |x| / 4, h(x) = max(0.3 x - 0.3, -x / 5): both inside the
    // 1/3-Lipschitz precondition; the cover of the graph of g - h must
    // contain every point within eps of it vertically.
    let g = PolyhedralFunc::new(
        1,
        vec![
            AffineFunc::new(Point::from_slice(&[0.25]), 0.0),
            AffineFunc::new(Point::from_slice(&[-0.25]), 0.0),
        ],
    )
    .unwrap();
    let h = PolyhedralFunc::new(
        1,
        vec![
            AffineFunc::new(Point::from_slice(&[0.3]), -0.3),
            AffineFunc::new(Point::from_slice(&[-0.2]), 0.0),
        ],
    )
    .unwrap();
    let eps = 0.05;
    let strip = dc_graph_cover(&g, &h, eps).unwrap();
    assert!(strip.width_bound() <= 8.0 * eps + 1e-12);
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(32);
    for _ in 0..4000 {
        let t = 2.0 * stream.next_f64() - 1.0;
        let s = eps * (2.0 * stream.next_f64() - 1.0);
        let val = g.eval(&Point::from_slice(&[t])).0 - h.eval(&Point::from_slice(&[t])).0;
        let x = Point::xy(t, val + s);
        assert!(
            strip.member(&x, &tol).unwrap(),
            "graph band point lost at t = {t}, offset {s}"
        );
    }
}

#[test]
fn dc_cover_rejects_steep_parts() {
    let g = PolyhedralFunc::new(
        1,
        vec![AffineFunc::new(Point::from_slice(&[0.5]), 0.0)],
    )
    .unwrap();
    let h = PolyhedralFunc::zero(1);
    let err = dc_graph_cover(&g, &h, 0.1).unwrap_err();
    assert!(matches!(err, gstrip_core::Error::Precondition(_)), "{err:?}");
}

#[test]
fn convex_shell_cover_of_square_cloud() {
    // Neighborhood shell of the unit square: every point at depth up to r
    // outside the interior must land in the strip.
    let corners = [
        Point::xy(0.0, 0.0),
        Point::xy(1.0, 0.0),
        Point::xy(1.0, 1.0),
        Point::xy(0.0, 1.0),
    ];
    let body = ConvexBody::cloud(&corners).unwrap();
    for r in [0.05, 0.1] {
        let eps = r / 2.0;
        let cover = convex_neighborhood_cover(&body, r, eps, 10_000, 77).unwrap();
        assert_eq!(cover.strips.len(), 1);
        assert_eq!(cover.violations, 0, "r = {r}: {} violations", cover.violations);
        assert!(cover.total_width_bound <= 2.0 * (r + eps) + 1e-12);
    }
}

#[test]
fn convex_shell_cover_of_disk_oracle() {
    let contains = |x: &Point| x.norm() <= 1.0;
    let bbox = BoundingBox::new(Point::xy(-1.0, -1.0), Point::xy(1.0, 1.0)).unwrap();
    let body = ConvexBody::oracle(&contains, bbox);
    for r in [0.05, 0.1] {
        let eps = r / 2.0;
        let cover = convex_neighborhood_cover(&body, r, eps, 10_000, 78).unwrap();
        assert_eq!(cover.violations, 0, "r = {r}");
        assert!(cover.total_width_bound <= 2.0 * (r + eps) + 1e-12);
    }
}

#[test]
fn convex_shell_strip_excludes_deep_interior() {
    let contains = |x: &Point| x.norm() <= 1.0;
    let bbox = BoundingBox::new(Point::xy(-1.0, -1.0), Point::xy(1.0, 1.0)).unwrap();
    let body = ConvexBody::oracle(&contains, bbox);
    let cover = convex_neighborhood_cover(&body, 0.1, 0.05, 1000, 79).unwrap();
    let strip = &cover.strips[0];
    let tol = Tolerances::default();
    // The center sits far inside the hull, outside the shell strip.
    assert!(!strip.member(&Point::xy(0.0, 0.0), &tol).unwrap());
    assert!(!strip.member(&Point::xy(0.2, -0.1), &tol).unwrap());
}

#[test]
fn surface_cover_of_sine_graph() {
    let eval = |x: &Point| x[0].sin() / 10.0;
    let field = ScalarField::new(&eval, 0.1).with_grad_lip(0.1);
    let w = BoundingBox::new(
        Point::from_slice(&[-1.0 / 12.0]),
        Point::from_slice(&[1.0 / 12.0]),
    )
    .unwrap();
    let eps = 0.01;
    let cover = surface_cover(&field, &w, eps, 10_000, 80).unwrap();
    assert_eq!(cover.violations, 0);
    assert!(cover.total_width_bound <= 16.0 * eps + 1e-12);
}

#[test]
fn surface_cover_of_parabola_graph() {
    let eval = |x: &Point| x[0] * x[0] / 20.0;
    let field = ScalarField::new(&eval, 0.1).with_grad_lip(0.1);
    let w = BoundingBox::new(
        Point::from_slice(&[-1.0 / 12.0]),
        Point::from_slice(&[1.0 / 12.0]),
    )
    .unwrap();
    let eps = 0.01;
    let cover = surface_cover(&field, &w, eps, 10_000, 81).unwrap();
    assert_eq!(cover.violations, 0);
    assert!(cover.total_width_bound <= 16.0 * eps + 1e-12);
}

#[test]
fn surface_cover_rejects_steep_fields() {
    let eval = |x: &Point| x[0];
    let field = ScalarField::new(&eval, 1.0).with_grad_lip(0.0);
    let w = BoundingBox::new(Point::from_slice(&[-1.0]), Point::from_slice(&[1.0])).unwrap();
    assert!(surface_cover(&field, &w, 0.01, 100, 82).is_err());
}

#[test]
fn radial_cover_bound_and_containment() {
    let intervals = [(0.5, 0.6), (1.0, 1.05)];
    let eps = 0.01;
    let cover = radial_cover(&intervals, eps, 10_000, 83).unwrap();
    assert_eq!(cover.violations, 0);
    let total_len: f64 = intervals.iter().map(|&(a, b)| b - a).sum();
    // Width bound 2L plus the declared slack, exactly from stored pieces.
    assert!(cover.total_width_bound <= 2.0 * total_len + cover.slack + 1e-12);
    assert!((cover.slack - 2.0 * eps * intervals.len() as f64).abs() <= 1e-12);
}

#[test]
fn radial_cover_rejects_bad_intervals() {
    assert!(radial_cover(&[(0.5, 0.4)], 0.01, 10, 84).is_err());
    assert!(radial_cover(&[(-0.1, 0.2)], 0.01, 10, 84).is_err());
    assert!(radial_cover(&[(0.1, 0.3), (0.25, 0.4)], 0.01, 10, 84).is_err());
}

#[test]
fn shell_strip_flattens_onto_polygon_boundary() {
    // Points of the shell prox onto the inscribed hull boundary: their
    // images must stop moving once mapped (projection idempotence up to
    // solver noise).
    let contains = |x: &Point| x.norm() <= 1.0;
    let bbox = BoundingBox::new(Point::xy(-1.0, -1.0), Point::xy(1.0, 1.0)).unwrap();
    let body = ConvexBody::oracle(&contains, bbox);
    let cover = convex_neighborhood_cover(&body, 0.1, 0.05, 100, 85).unwrap();
    let f = cover.strips[0].func();
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(86);
    for _ in 0..200 {
        let ang = stream.next_f64() * core::f64::consts::TAU;
        let rad = 1.0 + 0.08 * stream.next_f64();
        let x = Point::xy(rad * ang.cos(), rad * ang.sin());
        let y = prox(f, &x, &tol).unwrap().point;
        let z = prox(f, &y, &tol).unwrap().point;
        assert!(y.dist(&z) <= 1e-6, "prox not idempotent near the boundary");
    }
}
