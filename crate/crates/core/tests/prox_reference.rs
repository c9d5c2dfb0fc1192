//! Frozen reference values for the proximal map, cross-checked against an
//! independent convex-QP solver (epigraph formulation) and against closed
//! forms where the active set is known.

use gstrip_core::geom::{AffineFunc, Point};
use gstrip_core::polyfun::{prox, subgradient_certificate, PolyhedralFunc, Tolerances};

fn func(dim: usize, rows: &[(&[f64], f64)]) -> PolyhedralFunc {
    let pieces = rows
        .iter()
        .map(|(g, c)| AffineFunc::new(Point::from_slice(g), *c))
        .collect();
    PolyhedralFunc::new(dim, pieces).expect("valid test function")
}

/// max(y, -2y, x - y - 4, -2x + y - 4): two bounded collapse triangles plus
/// slab-like regions; exercised throughout this file.
fn wedge() -> PolyhedralFunc {
    func(
        2,
        &[
            (&[0.0, 1.0], 0.0),
            (&[0.0, -2.0], 0.0),
            (&[1.0, -1.0], -4.0),
            (&[-2.0, 1.0], -4.0),
        ],
    )
}

fn assert_prox(f: &PolyhedralFunc, x: (f64, f64), want: (f64, f64), tol: f64) {
    let res = prox(f, &Point::xy(x.0, x.1), &Tolerances::default()).expect("prox");
    let err = res.point.dist(&Point::xy(want.0, want.1));
    assert!(
        err <= tol,
        "prox({x:?}) = ({}, {}), wanted {want:?} within {tol}",
        res.point[0],
        res.point[1]
    );
}

#[test]
fn absolute_value_soft_threshold() {
    let f = func(2, &[(&[0.0, 1.0], 0.0), (&[0.0, -1.0], 0.0)]);
    let res = prox(&f, &Point::xy(3.0, 0.4), &Tolerances::default()).expect("prox");
    assert!(res.point.dist(&Point::xy(3.0, 0.0)) <= 1e-9);
    assert!(!res.differentiable);

    // x - y* = 0.7 * (0,1) + 0.3 * (0,-1); reference duals 0.7 / 0.3.
    let mut w = [0.0f64; 2];
    for &(i, l) in &res.dual_weights {
        w[i] = l;
    }
    assert!((w[0] - 0.7).abs() <= 1e-9, "weights {w:?}");
    assert!((w[1] - 0.3).abs() <= 1e-9, "weights {w:?}");
}

#[test]
fn wedge_reference_points() {
    let f = wedge();
    // Reference QP values (independent epigraph-form solve, 1e-8 accurate).
    assert_prox(&f, (1.5, 2.5), (1.5, 1.5), 1e-9);
    assert_prox(
        &f,
        (-3.0, -1.0),
        (-29.0 / 13.0, -2.0 / 13.0),
        1e-9,
    );
    assert_prox(&f, (6.0, 2.0), (6.0, 1.0), 1e-9);
    assert_prox(&f, (0.25, -0.75), (0.25, 0.0), 1e-9);
    assert_prox(&f, (-6.0, 3.5), (-4.0, 2.5), 1e-9);
}

#[test]
fn wedge_reference_duals() {
    let f = wedge();
    let res = prox(&f, &Point::xy(0.25, -0.75), &Tolerances::default()).expect("prox");
    let mut w = [0.0f64; 4];
    for &(i, l) in &res.dual_weights {
        w[i] = l;
    }
    // x - y* = (0, -0.75) = (5/12)(0,1) + (7/12)(0,-2).
    assert!((w[0] - 5.0 / 12.0).abs() <= 1e-9, "weights {w:?}");
    assert!((w[1] - 7.0 / 12.0).abs() <= 1e-9, "weights {w:?}");

    let res = prox(&f, &Point::xy(-3.0, -1.0), &Tolerances::default()).expect("prox");
    let mut w = [0.0f64; 4];
    for &(i, l) in &res.dual_weights {
        w[i] = l;
    }
    // Reference duals 8/13 on -2y and 5/13 on -2x + y - 4.
    assert!((w[1] - 8.0 / 13.0).abs() <= 1e-9, "weights {w:?}");
    assert!((w[3] - 5.0 / 13.0).abs() <= 1e-9, "weights {w:?}");
}

#[test]
fn collapse_triangles_map_to_single_points() {
    let f = wedge();
    // Each collapse triangle is the prox preimage of one triple-activity
    // point: the whole triangle maps to it.
    let left = [(-2.0, 1.0), (-2.0, -2.0), (-4.0, 1.0), (-2.7, 0.2), (-3.0, 0.5)];
    for &p in &left {
        assert_prox(&f, p, (-2.0, 0.0), 1e-9);
    }
    let right = [(4.0, 1.0), (4.0, -2.0), (5.0, -1.0), (4.4, -0.6), (4.2, 0.1)];
    for &p in &right {
        assert_prox(&f, p, (4.0, 0.0), 1e-9);
    }
}

#[test]
fn collapse_triangle_interior_sampling() {
    // Convex-combination sampling of both triangles: image diameter 0.
    let f = wedge();
    let tol = Tolerances::default();
    let tris = [
        ([(-2.0, 1.0), (-2.0, -2.0), (-4.0, 1.0)], (-2.0, 0.0)),
        ([(4.0, 1.0), (4.0, -2.0), (5.0, -1.0)], (4.0, 0.0)),
    ];
    let mut stream = gstrip_core::geom::SampleStream::new(7);
    for (tri, target) in tris {
        for _ in 0..100 {
            let mut a = stream.next_f64();
            let mut b = stream.next_f64();
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let c = 1.0 - a - b;
            let x = Point::xy(
                a * tri[0].0 + b * tri[1].0 + c * tri[2].0,
                a * tri[0].1 + b * tri[1].1 + c * tri[2].1,
            );
            let res = prox(&f, &x, &tol).expect("prox");
            assert!(res.point.dist(&Point::xy(target.0, target.1)) <= 1e-7);
        }
    }
}

#[test]
fn three_dimensional_reference_points() {
    let f = func(
        3,
        &[
            (&[0.6, -0.2, 0.3], 0.25),
            (&[-0.5, 0.4, 0.1], -0.5),
            (&[0.2, 0.7, -0.6], 0.125),
            (&[-0.1, -0.8, 0.4], 0.75),
            (&[0.0, 0.0, 0.0], 0.0),
        ],
    );
    let tol = Tolerances::default();
    let cases = [
        ((0.9, -1.3, 0.7), (1.0, -0.5, 0.3)),
        (
            (-0.4, 0.2, -1.1),
            (-0.505239520943689, -0.026197604695088, -0.815868263559657),
        ),
        (
            (2.0, 1.0, -0.5),
            (1.650561797683606, 0.636235955848713, -0.236235955753148),
        ),
    ];
    for ((x0, x1, x2), (y0, y1, y2)) in cases {
        let res = prox(&f, &Point::from_slice(&[x0, x1, x2]), &tol).expect("prox");
        let want = Point::from_slice(&[y0, y1, y2]);
        assert!(
            res.point.dist(&want) <= 1e-7,
            "prox({x0},{x1},{x2}) off by {}",
            res.point.dist(&want)
        );
    }
}

#[test]
fn four_dimensional_reference_points() {
    let f = func(
        4,
        &[
            (&[0.5, 0.5, -0.5, 0.25], 0.1),
            (&[-0.75, 0.1, 0.2, -0.3], -0.2),
            (&[0.05, -0.6, 0.55, 0.35], 0.3),
            (&[0.3, 0.3, 0.3, -0.7], 0.0),
            (&[-0.2, -0.2, -0.45, 0.5], -0.45),
            (&[0.1, 0.0, -0.1, 0.0], 0.2),
        ],
    );
    let tol = Tolerances::default();
    let cases = [
        (
            [1.1, -0.3, 0.6, -1.4],
            [0.8, -0.6, 0.3, -0.7],
        ),
        (
            [-0.8, 0.9, -0.2, 0.3],
            [
                -0.630268402666386,
                0.614314143360929,
                -0.075049713347388,
                0.344681904008109,
            ],
        ),
    ];
    for (x, y) in cases {
        let res = prox(&f, &Point::from_slice(&x), &tol).expect("prox");
        let want = Point::from_slice(&y);
        assert!(
            res.point.dist(&want) <= 1e-6,
            "prox({x:?}) off by {}",
            res.point.dist(&want)
        );
    }
}

#[test]
fn certificates_validate_reference_points() {
    let f = wedge();
    let tol = Tolerances::default();
    for &(x, y) in &[(1.5, 2.5), (-3.0, -1.0), (0.25, -0.75), (-2.7, 0.2), (4.4, -0.6)] {
        let p = Point::xy(x, y);
        let res = prox(&f, &p, &tol).expect("prox");
        let (ok, residual) = subgradient_certificate(&f, &p, &res, &tol);
        assert!(ok, "certificate failed at ({x}, {y}): residual {residual}");
        assert!(residual <= 1e-7);
    }
}

#[test]
fn constant_shift_leaves_prox_unchanged() {
    let f = wedge();
    let g = f.add_constant(12.625);
    let tol = Tolerances::default();
    for &(x, y) in &[(1.5, 2.5), (-3.0, -1.0), (0.3, 7.1), (-5.5, -0.25)] {
        let p = Point::xy(x, y);
        let a = prox(&f, &p, &tol).expect("prox").point;
        let b = prox(&g, &p, &tol).expect("prox").point;
        assert!(a.dist(&b) <= 1e-12, "shift moved prox at ({x}, {y})");
    }
}

#[test]
fn displacement_never_exceeds_gradient_bound() {
    let f = wedge();
    let lip = f.lip();
    assert!((lip - 5.0f64.sqrt()).abs() <= 1e-15);
    let tol = Tolerances::default();
    let mut stream = gstrip_core::geom::SampleStream::new(11);
    for _ in 0..2000 {
        let x = Point::xy(
            40.0 * (stream.next_f64() - 0.5),
            40.0 * (stream.next_f64() - 0.5),
        );
        let res = prox(&f, &x, &tol).expect("prox");
        assert!(res.point.dist(&x) <= lip + 1e-9);
    }
}
