//! Property tests for the proximal map: contraction, bounded displacement,
//! invariance under constant shifts, and agreement between the active-set
//! solver and the independent grid-search route.

use gstrip_core::geom::{AffineFunc, Point};
use gstrip_core::polyfun::{prox, prox_oracle, PolyhedralFunc, Tolerances};
use proptest::prelude::*;

fn arb_point(dim: usize, radius: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-radius..radius, dim)
        .prop_map(|v| Point::from_slice(&v))
}

/// Random function with gradients in the unit ball and modest offsets.
fn arb_func(dim: usize, max_pieces: usize) -> impl Strategy<Value = PolyhedralFunc> {
    prop::collection::vec(
        (prop::collection::vec(-1.0..1.0f64, dim), -2.0..2.0f64),
        1..=max_pieces,
    )
    .prop_map(move |rows| {
        let pieces = rows
            .into_iter()
            .map(|(g, c)| {
                let mut p = Point::from_slice(&g);
                let n = p.norm();
                if n > 1.0 {
                    p = p * (1.0 / n);
                }
                AffineFunc::new(p, c)
            })
            .collect();
        PolyhedralFunc::new(dim, pieces).expect("valid random function")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_a_contraction_2d(
        f in arb_func(2, 8),
        x in arb_point(2, 10.0),
        y in arb_point(2, 10.0),
    ) {
        let tol = Tolerances::default();
        let px = prox(&f, &x, &tol).unwrap().point;
        let py = prox(&f, &y, &tol).unwrap().point;
        prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-9);
    }

    #[test]
    fn prox_is_a_contraction_4d(
        f in arb_func(4, 10),
        x in arb_point(4, 10.0),
        y in arb_point(4, 10.0),
    ) {
        let tol = Tolerances::default();
        let px = prox(&f, &x, &tol).unwrap().point;
        let py = prox(&f, &y, &tol).unwrap().point;
        prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-9);
    }

    #[test]
    fn displacement_bounded_by_lip(
        f in arb_func(3, 9),
        x in arb_point(3, 12.0),
    ) {
        let tol = Tolerances::default();
        let res = prox(&f, &x, &tol).unwrap();
        prop_assert!(res.point.dist(&x) <= f.lip() + 1e-9);
    }

    #[test]
    fn constant_shift_invariance(
        f in arb_func(2, 6),
        x in arb_point(2, 8.0),
        c in -4.0..4.0f64,
    ) {
        // Offsets shifted by a dyadic-safe constant leave the argmin
        // unchanged; allow only solver-level noise.
        let tol = Tolerances::default();
        let a = prox(&f, &x, &tol).unwrap().point;
        let b = prox(&f.add_constant(c), &x, &tol).unwrap().point;
        prop_assert!(a.dist(&b) <= 1e-10);
    }

    #[test]
    fn active_set_solver_matches_grid_search(
        f in arb_func(2, 6),
        x in arb_point(2, 4.0),
    ) {
        let tol = Tolerances::default();
        let fast = prox(&f, &x, &tol).unwrap().point;
        let slow = prox_oracle(&f, &x, 2.0 * f.lip() + 0.5, 6).unwrap();
        prop_assert!(
            fast.dist(&slow) <= 1e-4,
            "routes disagree by {}", fast.dist(&slow)
        );
    }

    #[test]
    fn dual_weights_reconstruct_displacement(
        f in arb_func(3, 8),
        x in arb_point(3, 6.0),
    ) {
        let tol = Tolerances::default();
        let res = prox(&f, &x, &tol).unwrap();
        let mut recon = Point::zeros(3);
        let mut total = 0.0;
        for &(i, l) in &res.dual_weights {
            prop_assert!(l >= -1e-12);
            recon = recon + f.pieces()[i].gradient * l;
            total += l;
        }
        let target = x - res.point;
        if target.norm() > 1e-9 {
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }
        prop_assert!(recon.dist(&target) <= 1e-7);
    }

    #[test]
    fn prox_point_attains_min_value(
        f in arb_func(2, 7),
        x in arb_point(2, 6.0),
        probe in arb_point(2, 8.0),
    ) {
        // The objective at the prox point never exceeds it at any probe.
        let tol = Tolerances::default();
        let y = prox(&f, &x, &tol).unwrap().point;
        let obj = |p: &Point| f.eval(p).0 + 0.5 * p.dist(&x) * p.dist(&x);
        prop_assert!(obj(&y) <= obj(&probe) + 1e-9);
    }
}

#[test]
fn grid_search_agreement_at_kinks() {
    // Points straddling kinks, where the two routes are most likely to
    // disagree; mirrors the property test with a fixed adversarial set.
    let f = PolyhedralFunc::new(
        2,
        vec![
            AffineFunc::new(Point::xy(0.0, 1.0), 0.0),
            AffineFunc::new(Point::xy(0.0, -2.0), 0.0),
            AffineFunc::new(Point::xy(1.0, -1.0), -4.0),
            AffineFunc::new(Point::xy(-2.0, 1.0), -4.0),
        ],
    )
    .unwrap();
    let tol = Tolerances::default();
    for &(x, y) in &[
        (0.0, 0.5),
        (0.0, -1.0),
        (-2.5, 0.0),
        (4.5, -0.5),
        (6.0, 1.9),
        (-1.0, 0.0),
    ] {
        let p = Point::xy(x, y);
        let fast = prox(&f, &p, &tol).unwrap().point;
        let slow = prox_oracle(&f, &p, 2.0 * f.lip() + 0.5, 6).unwrap();
        assert!(
            fast.dist(&slow) <= 1e-4,
            "disagreement {} at ({x}, {y})",
            fast.dist(&slow)
        );
    }
}

#[test]
fn one_dimensional_soft_threshold_closed_form() {
    // f(t) = a|t|: prox shrinks toward 0 by a, exactly.
    let a = 0.375;
    let f = PolyhedralFunc::new(
        1,
        vec![
            AffineFunc::new(Point::from_slice(&[a]), 0.0),
            AffineFunc::new(Point::from_slice(&[-a]), 0.0),
        ],
    )
    .unwrap();
    let tol = Tolerances::default();
    for &t in &[-3.0, -0.5, -0.2, 0.0, 0.1, 0.375, 2.25] {
        let res = prox(&f, &Point::from_slice(&[t]), &tol).unwrap();
        let want = if t.abs() <= a { 0.0 } else { t - a * t.signum() };
        assert!(
            (res.point[0] - want).abs() <= 1e-12,
            "prox({t}) = {}, want {want}",
            res.point[0]
        );
    }
}
