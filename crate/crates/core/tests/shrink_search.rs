use std::collections::BTreeSet;

use coarsen::harris::{flip_rate, Rate};
use coarsen::plane_graph::{build_lattice, BoundarySpec, LatticeKind, Window};
use coarsen::shrink::{
    certify_class_h, check_planar_shrink_set, check_shrink_set, random_connected_set, random_line, search_frozen_set,
    search_planar_violation, ShrinkVerdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn window(kind: LatticeKind, extent: usize) -> Window {
    build_lattice(kind, extent, BoundarySpec::Free).unwrap()
}

#[test]
fn square_has_no_small_frozen_set() {
    let w = window(LatticeKind::Square, 12);
    let r = search_frozen_set(&w, 8, u64::MAX).unwrap();
    assert_eq!(r.verdict, ShrinkVerdict::HoldsOnWindow);
    assert!(r.search_stats.connected_only);
}

#[test]
fn triangular_has_no_small_frozen_set() {
    let w = window(LatticeKind::Triangular, 11);
    let r = search_frozen_set(&w, 8, u64::MAX).unwrap();
    assert_eq!(r.verdict, ShrinkVerdict::HoldsOnWindow);
}

#[test]
fn budget_exhaustion_is_inconclusive() {
    let w = window(LatticeKind::Square, 12);
    let r = search_frozen_set(&w, 8, 1000).unwrap();
    assert_eq!(r.verdict, ShrinkVerdict::Inconclusive);
    assert_eq!(r.search_stats.subsets_examined, 1000);
}

#[test]
fn planar_search_on_hexagonal_finds_violation() {
    let w = window(LatticeKind::Hexagonal, 7);
    let r = search_planar_violation(&w, 6, 40, u64::MAX).unwrap();
    assert_eq!(r.verdict, ShrinkVerdict::Violated);
    assert!(r.witness.unwrap().line.is_some());
}

#[test]
fn line_arrangements_are_certified() {
    for kind in [
        LatticeKind::Square,
        LatticeKind::Triangular,
        LatticeKind::DoubleTriangular,
        LatticeKind::ModifiedDoubleSquare,
        LatticeKind::StripePi,
    ] {
        let w = window(kind, 11);
        let r = certify_class_h(&w, 2_000, 8, 7).unwrap();
        assert!(r.certified, "{kind}: {:?}", r.failure);
        assert!(r.even_degrees && r.p2_lines_tiled);
    }
}

#[test]
fn hexagonal_fails_line_tiling() {
    let r = certify_class_h(&window(LatticeKind::Hexagonal, 9), 100, 6, 7).unwrap();
    assert!(!r.certified);
    assert!(!r.p2_lines_tiled);
}

// Ten thousand random (S, line) pairs per arrangement: no planar violation,
// and each planar pass comes with a shrink pass for the same S.
#[test]
fn random_planar_checks_never_fail_on_arrangements() {
    for kind in [LatticeKind::Square, LatticeKind::Triangular, LatticeKind::DoubleTriangular] {
        let w = window(kind, 13);
        let g = w.graph();
        let deep: Vec<bool> =
            (0..w.len()).map(|v| w.phantom(v) == 0 && g.neighbors(v).iter().all(|&u| w.phantom(u) == 0)).collect();
        let list: Vec<usize> = (0..w.len()).filter(|&v| deep[v]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let s = random_connected_set(&w, &deep, &list, 10, &mut rng);
            let line = random_line(&w, &s, &mut rng);
            let planar = check_planar_shrink_set(&w, &s, &line).unwrap();
            assert!(!planar.is_violation(), "{kind}: {s:?} {line:?}");
            assert!(!check_shrink_set(&w, &s).unwrap().is_violation());
        }
    }
}

#[test]
fn frozen_set_has_zero_rates_inside() {
    let w = window(LatticeKind::Hexagonal, 9);
    let r = search_frozen_set(&w, 6, u64::MAX).unwrap();
    let s: BTreeSet<usize> = r.witness.unwrap().set.into_iter().collect();
    let spins: Vec<i8> = (0..w.len()).map(|v| if s.contains(&v) { 1 } else { -1 }).collect();
    for &v in &s {
        assert_eq!(flip_rate(&w, &spins, v), Rate::Zero);
    }
}
