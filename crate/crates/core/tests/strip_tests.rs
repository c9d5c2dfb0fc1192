//! Generalized strips: classical-slab embedding, membership, merging, image
//! hyperplanes, pruning, and the width-bound bookkeeping.

use gstrip_core::geom::{AffineFunc, ClassicalStrip, Point, SampleStream};
use gstrip_core::gstrip::{gamma_upper_bound, merge_all, prune, GenStrip};
use gstrip_core::polyfun::{PolyhedralFunc, Tolerances};
use proptest::prelude::*;

fn abs_line(dim: usize, axis: usize, center: f64, width: f64) -> GenStrip {
    let mut n = Point::zeros(dim);
    n[axis] = 1.0;
    GenStrip::from_classical(&ClassicalStrip::new(n, center, width).unwrap()).unwrap()
}

#[test]
fn classical_strip_membership_is_exact() {
    // Slab |y - 5| <= w/2 embedded as a strip: membership must match the
    // slab inequality away from a 1e-9 band.
    let strip = abs_line(2, 1, 5.0, 4.0);
    assert!((strip.width_bound() - 4.0).abs() <= 1e-12);
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(3);
    for _ in 0..10_000 {
        let x = Point::xy(
            20.0 * (stream.next_f64() - 0.5),
            20.0 * stream.next_f64() - 5.0,
        );
        let slab = (x[1] - 5.0).abs() <= 2.0;
        let member = strip.member(&x, &tol).unwrap();
        if member != slab {
            let dist_to_edge = ((x[1] - 5.0).abs() - 2.0).abs();
            assert!(
                dist_to_edge <= 1e-9,
                "disagreement at y = {} distance {dist_to_edge}",
                x[1]
            );
        }
    }
}

#[test]
fn tilted_classical_strip_matches_slab() {
    // Normal (3, -4) normalizes to (0.6, -0.8) and the center rescales with
    // it, so the slab is |0.6 x - 0.8 y - 0.2| <= 0.25.
    let n = Point::xy(3.0, -4.0);
    let cs = ClassicalStrip::new(n, 1.0, 0.5).unwrap();
    let strip = GenStrip::from_classical(&cs).unwrap();
    assert!(cs.membership(&Point::xy(1.0, 0.5)));
    assert!(!cs.membership(&Point::xy(1.0, 1.0)));
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(4);
    for _ in 0..10_000 {
        let x = Point::xy(
            8.0 * (stream.next_f64() - 0.5),
            8.0 * (stream.next_f64() - 0.5),
        );
        let slab = (0.6 * x[0] - 0.8 * x[1] - 0.2).abs() <= 0.25;
        assert_eq!(slab, cs.membership(&x));
        let member = strip.member(&x, &tol).unwrap();
        if member != slab {
            let edge = ((0.6 * x[0] - 0.8 * x[1] - 0.2).abs() - 0.25).abs();
            assert!(edge <= 1e-9, "disagreement {edge} at {x:?}");
        }
    }
}

#[test]
fn zero_function_has_empty_strip() {
    let strip = GenStrip::new(PolyhedralFunc::zero(2));
    let tol = Tolerances::default();
    assert_eq!(strip.width_bound(), 0.0);
    let mut stream = SampleStream::new(5);
    for _ in 0..1000 {
        let x = Point::xy(
            10.0 * (stream.next_f64() - 0.5),
            10.0 * (stream.next_f64() - 0.5),
        );
        assert!(!strip.member(&x, &tol).unwrap());
    }
}

#[test]
fn double_slab_merge_reference() {
    // |y| merged with |y - 10|: pieces 2y - 9, 9, -2y + 11 and the dominated
    // -11, which pruning must drop. The merged strip is exactly
    // {-1 <= y <= 1} union {9 <= y <= 11}.
    let a = abs_line(1, 0, 0.0, 2.0);
    let b = abs_line(1, 0, 10.0, 2.0);
    let h = a.merge(&b).unwrap();

    let f = h.func();
    assert_eq!(f.piece_count(), 3, "dominated constant piece must be gone");
    let mut rows: Vec<(f64, f64)> = f
        .pieces()
        .iter()
        .map(|p| (p.gradient[0], p.offset))
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(rows, vec![(-2.0, 11.0), (0.0, 9.0), (2.0, -9.0)]);

    assert!((h.width_bound() - 4.0).abs() <= 1e-12);

    let tol = Tolerances::default();
    for &(t, want) in &[
        (-1.5, false),
        (-1.0 + 1e-6, true),
        (0.0, true),
        (1.0 - 1e-6, true),
        (1.5, false),
        (5.0, false),
        (9.0 + 1e-6, true),
        (10.0, true),
        (11.0 - 1e-6, true),
        (11.5, false),
    ] {
        let got = h.member(&Point::from_slice(&[t]), &tol).unwrap();
        assert_eq!(got, want, "membership at {t}");
    }
}

#[test]
fn double_slab_image_planes_reference() {
    // Only the planes y = 9 and y = 1 carry the image; the crossing of the
    // two sloped pieces at y = 5 is never jointly active and must be
    // filtered out.
    let a = abs_line(2, 1, 0.0, 2.0);
    let b = abs_line(2, 1, 10.0, 2.0);
    let h = a.merge(&b).unwrap();
    let planes = h.image_hyperplanes(&Tolerances::default());
    let mut offsets: Vec<f64> = planes
        .planes
        .iter()
        .map(|p| {
            let plane = &p.plane;
            // Canonical normal is +/- e_y; report the y-intercept.
            assert!(plane.normal()[0].abs() <= 1e-12);
            plane.offset() / plane.normal()[1]
        })
        .collect();
    offsets.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(offsets.len(), 2, "planes: {offsets:?}");
    assert!((offsets[0] - 1.0).abs() <= 1e-9);
    assert!((offsets[1] - 9.0).abs() <= 1e-9);
}

#[test]
fn merge_all_balanced_covers_all_inputs() {
    let strips: Vec<GenStrip> = (0..5)
        .map(|i| abs_line(2, i % 2, i as f64, 0.5))
        .collect();
    let merged = merge_all(&strips, 4096).unwrap();
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(6);
    for _ in 0..2000 {
        let x = Point::xy(
            12.0 * (stream.next_f64() - 0.5),
            12.0 * (stream.next_f64() - 0.5),
        );
        let any = strips.iter().any(|s| s.member(&x, &tol).unwrap());
        if any {
            assert!(merged.member(&x, &tol).unwrap(), "union point lost at {x:?}");
        }
    }
    let total: f64 = strips.iter().map(|s| s.width_bound()).sum();
    assert!(merged.width_bound() <= total + 1e-12);
    assert!((gamma_upper_bound(&strips) - total).abs() <= 1e-15);
}

#[test]
fn prune_keeps_evaluation_identical() {
    // Redundant pieces dropped by certificates cannot change any value.
    let f = PolyhedralFunc::new(
        2,
        vec![
            AffineFunc::new(Point::xy(1.0, 0.0), 0.0),
            AffineFunc::new(Point::xy(-1.0, 0.0), 0.0),
            AffineFunc::new(Point::xy(0.0, 1.0), 0.0),
            AffineFunc::new(Point::xy(0.0, -1.0), 0.0),
            // Strictly dominated: average of the first two minus a margin.
            AffineFunc::new(Point::xy(0.0, 0.0), -0.5),
            // Exact duplicate with a lower offset.
            AffineFunc::new(Point::xy(1.0, 0.0), -1.0),
            // Dominated combination of x and y pieces.
            AffineFunc::new(Point::xy(0.5, 0.5), -0.25),
        ],
    )
    .unwrap();
    let g = prune(&f);
    assert_eq!(g.piece_count(), 4, "pieces left: {}", g.piece_count());
    let mut stream = SampleStream::new(8);
    for _ in 0..10_000 {
        let x = Point::xy(
            30.0 * (stream.next_f64() - 0.5),
            30.0 * (stream.next_f64() - 0.5),
        );
        assert_eq!(f.eval(&x).0, g.eval(&x).0, "value changed at {x:?}");
    }
}

#[test]
fn merge_dimension_mismatch_is_rejected() {
    let a = abs_line(1, 0, 0.0, 1.0);
    let b = abs_line(2, 1, 0.0, 1.0);
    assert!(a.merge(&b).is_err());
}

#[test]
fn merge_piece_cap_reports_budget() {
    let strips: Vec<GenStrip> = (0..6)
        .map(|i| {
            let angle = i as f64 * 0.5;
            let n = Point::xy(angle.cos(), angle.sin());
            GenStrip::from_classical(&ClassicalStrip::new(n, 0.1 * i as f64, 0.2).unwrap())
                .unwrap()
        })
        .collect();
    // Six generic directions force well over 4 pieces; cap at 4.
    let err = merge_all(&strips, 4).unwrap_err();
    assert!(matches!(err, gstrip_core::Error::Budget(_)), "got {err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn union_lemma_holds_for_random_slabs(
        c1 in -3.0..3.0f64,
        c2 in -3.0..3.0f64,
        w1 in 0.05..1.0f64,
        w2 in 0.05..1.0f64,
        angle1 in 0.0..3.14f64,
        angle2 in 0.0..3.14f64,
        seed in 0u64..1000,
    ) {
        let n1 = Point::xy(angle1.cos(), angle1.sin());
        let n2 = Point::xy(angle2.cos(), angle2.sin());
        let a = GenStrip::from_classical(&ClassicalStrip::new(n1, c1, w1).unwrap()).unwrap();
        let b = GenStrip::from_classical(&ClassicalStrip::new(n2, c2, w2).unwrap()).unwrap();
        let h = a.merge(&b).unwrap();

        // Lipschitz additivity, exactly from stored gradients.
        prop_assert!(h.func().lip() <= a.func().lip() + b.func().lip() + 1e-12);

        let tol = Tolerances::default();
        let mut stream = SampleStream::new(seed);
        for _ in 0..200 {
            let x = Point::xy(
                10.0 * (stream.next_f64() - 0.5),
                10.0 * (stream.next_f64() - 0.5),
            );
            if a.member(&x, &tol).unwrap() || b.member(&x, &tol).unwrap() {
                prop_assert!(h.member(&x, &tol).unwrap(), "lost {:?}", x);
            }
        }
    }

    #[test]
    fn prune_preserves_values_on_random_functions(
        rows in prop::collection::vec(
            (prop::collection::vec(-1.0..1.0f64, 2), -1.0..1.0f64),
            2..12,
        ),
        seed in 0u64..1000,
    ) {
        let pieces: Vec<AffineFunc> = rows
            .iter()
            .map(|(g, c)| AffineFunc::new(Point::from_slice(g), *c))
            .collect();
        let f = PolyhedralFunc::new(2, pieces).unwrap();
        let g = prune(&f);
        prop_assert!(g.piece_count() <= f.piece_count());
        prop_assert!(g.lip() <= f.lip() + 1e-15);
        let mut stream = SampleStream::new(seed);
        for _ in 0..500 {
            let x = Point::xy(
                50.0 * (stream.next_f64() - 0.5),
                50.0 * (stream.next_f64() - 0.5),
            );
            prop_assert_eq!(f.eval(&x).0, g.eval(&x).0);
        }
    }
}
