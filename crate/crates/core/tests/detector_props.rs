mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankloop::detector::{loop_test, DetectOptions};
use rankloop::phase::{analyze_loop, AnalysisOptions};
use rankloop::{detect, Bbox, Classification, GaugeMode, PathLoop};

fn unit_box() -> Bbox {
    Bbox::new(-1.0, 1.0, -1.0, 1.0).unwrap()
}

#[test]
fn finds_both_example_roots() {
    let r = detect(
        &common::family("triangular2"),
        unit_box(),
        &DetectOptions::default(),
    )
    .unwrap();
    assert_eq!(r.points.len(), 1);
    let p = r.points[0].location;
    assert!(p[0].hypot(p[1]) <= 1e-8);

    let r = detect(
        &common::family("affine4"),
        unit_box(),
        &DetectOptions::default(),
    )
    .unwrap();
    assert_eq!(r.points.len(), 1);
    let p = r.points[0].location;
    assert!((p[0] - 0.025743528656527865).abs() < 1e-9 && (p[1] - 0.0927385452985074).abs() < 1e-9);
    assert!(r.points[0].genericity.regular);
    assert!(r.points[0].cell.contains(p));
}

#[test]
fn detection_is_deterministic() {
    let f = common::family("affine4");
    let opts = DetectOptions {
        initial_split: 3,
        ..DetectOptions::default()
    };
    let a = detect(&f, unit_box(), &opts).unwrap();
    let b = detect(&f, unit_box(), &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.points.len(), 1);
}

#[test]
fn two_roots_are_separated_by_subdivision() {
    // [[(x - 0.5) - iy, 0.3], [0, 3((x + 0.5) - iy)]] is singular at (±0.5, 0).
    // The two roots cancel on the outer loop, so start from a 2x2 tiling.
    use rankloop::model::Term;
    use rankloop::{ComplexMatrix, MatrixFamily, C64};
    let d =
        |a: f64, b: f64| ComplexMatrix::from_diag(&[C64::new(a, b), C64::new(a * 3.0, b * 3.0)]);
    let f = MatrixFamily::new(
        2,
        vec![
            Term {
                jx: 0,
                ky: 0,
                matrix: ComplexMatrix::from_rows(&[
                    vec![C64::new(-0.5, 0.0), C64::new(0.3, 0.0)],
                    vec![C64::new(0.0, 0.0), C64::new(1.5, 0.0)],
                ])
                .unwrap(),
            },
            Term {
                jx: 1,
                ky: 0,
                matrix: d(1.0, 0.0),
            },
            Term {
                jx: 0,
                ky: 1,
                matrix: d(0.0, -1.0),
            },
        ],
    )
    .unwrap();
    let single = detect(
        &f,
        Bbox::new(-1.0, 1.0, -0.7, 0.9).unwrap(),
        &DetectOptions::default(),
    )
    .unwrap();
    assert!(single.points.is_empty());
    let opts = DetectOptions {
        initial_split: 2,
        ..DetectOptions::default()
    };
    let split = detect(&f, Bbox::new(-1.0, 1.0, -0.7, 0.9).unwrap(), &opts).unwrap();
    let mut xs: Vec<f64> = split.points.iter().map(|p| p.location[0]).collect();
    xs.sort_by(f64::total_cmp);
    assert_eq!(xs.len(), 2, "{split:?}");
    assert!((xs[0] + 0.5).abs() < 1e-8 && (xs[1] - 0.5).abs() < 1e-8);
}

#[test]
fn cell_and_inscribed_circle_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = DetectOptions::default();
    for _ in 0..10 {
        let root = [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
        let m = common::manufactured(&mut rng, 3, root);
        // Cross shape: a box around the root and boxes beside it, each with
        // its inscribed circle.
        for (dx, dy) in [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)] {
            let c = [root[0] + dx, root[1] + dy];
            let half = 0.2;
            let b = Bbox::new(c[0] - half, c[0] + half, c[1] - half, c[1] + half).unwrap();
            let cell = loop_test(&m.family, b, &opts).classification;
            let circle = PathLoop::circle(c, half, 256).unwrap();
            let disk = analyze_loop(
                &m.family,
                &circle,
                GaugeMode::Joint,
                &AnalysisOptions::default(),
            )
            .unwrap()
            .report
            .classification;
            assert_eq!(cell, disk);
            let expect = if dx == 0.0 && dy == 0.0 {
                Classification::RankLossInside
            } else {
                Classification::NoRankLoss
            };
            assert_eq!(cell, expect);
        }
    }
}
