use coarsen::exact::{Point, QSqrt3};
use coarsen::geometry::{build_cover, build_crossing_geometry, conv_g, hull_contains_ball, points_rotation_invariant};
use coarsen::plane_graph::{build_lattice, BoundarySpec, LatticeKind};
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[test]
fn annulus_on_every_rotation_class() {
    for (kind, a, extent, l) in [
        (LatticeKind::Square, 4, 60, 20),
        (LatticeKind::Triangular, 3, 90, 12),
        (LatticeKind::Hexagonal, 3, 70, 14),
        (LatticeKind::DoubleTriangular, 3, 50, 14),
        (LatticeKind::ModifiedDoubleSquare, 4, 36, 24),
    ] {
        let t = std::time::Instant::now();
        let w = build_lattice(kind, extent, BoundarySpec::Free).unwrap();
        let geo = build_crossing_geometry(&w, a, &QSqrt3::int(l), 24).unwrap_or_else(|e| panic!("{kind}: {e}"));
        let g = w.graph();
        assert!(g.is_connected_set(&geo.w_l), "{kind}");
        let pts: Vec<Point> = geo.w_l.iter().map(|&v| g.position(v).clone()).collect();
        assert!(points_rotation_invariant(&pts, a).unwrap(), "{kind}");
        println!("{kind}: |W_L| = {}, r1 = {}, |U| = {}, {:?}", geo.w_l.len(), geo.r1_f64, geo.u.len(), t.elapsed());
    }
}

#[test]
fn annulus_grows_linearly() {
    let w = build_lattice(LatticeKind::Square, 200, BoundarySpec::Free).unwrap();
    let sizes: Vec<usize> = [20, 40, 80]
        .iter()
        .map(|&l| build_crossing_geometry(&w, 4, &QSqrt3::int(l), 24).unwrap().w_l.len())
        .collect();
    for pair in sizes.windows(2) {
        let ratio = pair[1] as f64 / pair[0] as f64;
        assert!((1.5..=2.5).contains(&ratio), "{sizes:?}");
    }
}

// Geometric lemma at the q floor: a point from each rotated ball keeps B(O, 1/3) in the hull.
#[test]
fn perturbed_cover_points_keep_the_ball() {
    let third = QSqrt3::ratio(1, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for a in [3u32, 4] {
        let q = 24u32;
        let c = build_cover(a, q).unwrap();
        for i in 0..q as usize {
            for _ in 0..10_000 / q as usize + 1 {
                let pts: Vec<Point> = (0..a as usize)
                    .map(|k| {
                        let (cx, cy) = c[i + k * q as usize].to_f64();
                        let r = 4.0 / q as f64 * rng.random::<f64>().sqrt() * 0.999_999;
                        let phi = rng.random::<f64>() * std::f64::consts::TAU;
                        Point::new(
                            QSqrt3::from_f64(cx + r * phi.cos()).unwrap(),
                            QSqrt3::from_f64(cy + r * phi.sin()).unwrap(),
                        )
                    })
                    .collect();
                assert!(hull_contains_ball(&pts, &third));
            }
        }
    }
}

#[test]
fn cover_covers_the_boundary_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for a in [3u32, 4] {
        let q = 24;
        let delta = 1.0 / (2.0 * q as f64) - 1.0 / (100.0 * q as f64);
        let centers: Vec<(f64, f64)> = build_cover(a, q).unwrap().iter().map(|p| p.to_f64()).collect();
        let normals: Vec<(f64, f64)> = (0..a)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / a as f64;
                (-t.sin(), t.cos())
            })
            .collect();
        let gauge = |x: f64, y: f64| normals.iter().map(|n| n.0 * x + n.1 * y).fold(f64::MIN, f64::max);
        let mut n = 0;
        while n < 10_000 {
            let (x, y) = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            let g = gauge(x, y);
            if g < 1.0 - delta || g > 1.0 + delta {
                continue;
            }
            n += 1;
            let ok = centers.iter().any(|c| ((x - c.0).powi(2) + (y - c.1).powi(2)).sqrt() <= 4.0 / q as f64);
            assert!(ok, "({x}, {y}) uncovered for a = {a}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: Some(Box::new(FileFailurePersistence::Off)), ..ProptestConfig::default() })]
    #[test]
    fn conv_g_is_monotone(picks in proptest::collection::vec((-4i64..=4, -4i64..=4), 1..6), extra in (-4i64..=4, -4i64..=4)) {
        let w = build_lattice(LatticeKind::Triangular, 11, BoundarySpec::Free).unwrap();
        let g = w.graph();
        let id = |(x, y): (i64, i64)| {
            let p = Point::new(QSqrt3::int(x) + QSqrt3::ratio(y, 2), QSqrt3::sqrt3() * QSqrt3::ratio(y, 2));
            g.id_at(&p).unwrap()
        };
        let s: BTreeSet<usize> = picks.iter().map(|&p| id(p)).collect();
        let mut bigger = s.clone();
        bigger.insert(id(extra));
        let small_hull = conv_g(g, &s);
        prop_assert!(s.is_subset(&small_hull));
        prop_assert!(small_hull.is_subset(&conv_g(g, &bigger)));
    }
}
