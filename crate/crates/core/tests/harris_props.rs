use std::collections::BTreeSet;

use coarsen::harris::{
    delta_h, flip_rate, run, run_coupled, run_fixation_resample, run_logged, sample_initial, CouplingPolicy,
    Dynamics, Rate, ResampleParams,
};
use coarsen::observables::FlipCounter;
use coarsen::plane_graph::{build_lattice, BoundarySpec, LatticeKind, PlaneGraph, Window};
use coarsen::shrink::search_frozen_set;
use coarsen::{HarrisSchedule, Point, QSqrt3, SpinConfiguration};
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: Some(Box::new(FileFailurePersistence::Off)), ..ProptestConfig::default() }
}

/// A centre joined to `d` leaves.
fn star(d: usize) -> Window {
    let leaves = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1)];
    let mut pts = vec![Point::origin()];
    pts.extend(leaves[..d].iter().map(|&(x, y)| Point::new(QSqrt3::int(x), QSqrt3::int(y))));
    let g = PlaneGraph::new(pts, (1..=d).map(|i| (0, i)), None).unwrap();
    Window::from_graph(g, BoundarySpec::Free).unwrap()
}

#[test]
fn rate_table_is_exact() {
    for d in 1..=6 {
        let w = star(d);
        for pattern in 0u32..(1 << (d + 1)) {
            let spins: Vec<i8> = (0..=d).map(|i| if pattern >> i & 1 == 1 { 1 } else { -1 }).collect();
            let agree = (1..=d).filter(|&i| spins[i] == spins[0]).count();
            let expect = match (2 * agree).cmp(&d) {
                std::cmp::Ordering::Less => Rate::One,
                std::cmp::Ordering::Equal => Rate::Half,
                std::cmp::Ordering::Greater => Rate::Zero,
            };
            assert_eq!(flip_rate(&w, &spins, 0), expect, "d = {d}, pattern {pattern:b}");
            let mut flipped = spins.clone();
            flipped[0] = -flipped[0];
            let sum = flip_rate(&w, &spins, 0).value() + flip_rate(&w, &flipped, 0).value();
            assert_eq!(sum, 1.0);
            assert_eq!(delta_h(&w, &spins, 0), -delta_h(&w, &flipped, 0));
        }
    }
}

#[test]
fn fixed_boundary_counts_phantoms() {
    let w = build_lattice(LatticeKind::Square, 3, BoundarySpec::FixedPlus).unwrap();
    let corner = (0..w.len()).find(|&v| w.phantom(v) == 2).unwrap();
    let spins = vec![-1i8; w.len()];
    // Two −1 neighbours, two +1 phantoms: a tie.
    assert_eq!(flip_rate(&w, &spins, corner), Rate::Half);
    let w = w.with_boundary(BoundarySpec::Free).unwrap();
    assert_eq!(flip_rate(&w, &spins, corner), Rate::Zero);
}

fn torus(kind: LatticeKind, n: usize) -> Window {
    build_lattice(kind, n, BoundarySpec::Periodic).unwrap()
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn rates_are_attractive(bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 64)) {
        let w = torus(LatticeKind::Square, 8);
        // σ ≤ σ′ built from pairs (low, raise).
        let lo: Vec<i8> = bits.iter().map(|&(a, _)| if a { 1 } else { -1 }).collect();
        let hi: Vec<i8> = bits.iter().zip(&lo).map(|(&(_, r), &l)| if r { 1 } else { l }).collect();
        for v in 0..w.len() {
            let (rl, rh) = (flip_rate(&w, &lo, v), flip_rate(&w, &hi, v));
            if lo[v] == -1 && hi[v] == -1 {
                prop_assert!(rl <= rh, "upward rate not monotone at {}", v);
            }
            if lo[v] == 1 && hi[v] == 1 {
                prop_assert!(rl >= rh, "downward rate not monotone at {}", v);
            }
        }
    }

    #[test]
    fn coupled_runs_stay_ordered(seed in any::<u64>(), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        let w = torus(LatticeKind::Square, 10);
        let s = HarrisSchedule::new(seed);
        let lower = sample_initial(&w, p.min(q), &s).unwrap();
        // Raising spins keeps the pair ordered.
        let mut upper = lower.clone();
        let extra = sample_initial(&w, p.max(q), &HarrisSchedule::new(seed ^ 0x5555)).unwrap();
        for v in 0..w.len() {
            upper.spins[v] = upper.spins[v].max(extra.spins[v]);
        }
        let out = run_coupled(&w, &lower, &upper, s, 5.0).unwrap();
        prop_assert!(out.lower.le(&out.upper));
        prop_assert!(out.order_checks > 0);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let w = torus(LatticeKind::Triangular, 8);
        let s = HarrisSchedule::new(seed);
        let init = sample_initial(&w, 0.5, &s).unwrap();
        let (a, la) = run_logged(&w, &init, s, 4.0).unwrap();
        let (b, lb) = run_logged(&w, &init, s, 4.0).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(la, lb);
    }

    #[test]
    fn global_spin_flip_negates_the_trajectory(seed in any::<u64>()) {
        let w = torus(LatticeKind::Square, 8);
        let s = HarrisSchedule::new(seed);
        let init = sample_initial(&w, 0.5, &s).unwrap();
        let neg = SpinConfiguration { spins: init.spins.iter().map(|x| -x).collect(), time: 0.0 };
        let (a, la) = run_logged(&w, &init, s, 4.0).unwrap();
        let (b, lb) = run_logged(&w, &neg, s, 4.0).unwrap();
        prop_assert!(a.spins.iter().zip(&b.spins).all(|(x, y)| *x == -*y));
        prop_assert_eq!(la.len(), lb.len());
        for (x, y) in la.iter().zip(&lb) {
            prop_assert_eq!((x.time, x.vertex, x.flipped, x.delta_h), (y.time, y.vertex, y.flipped, y.delta_h));
        }
    }

    #[test]
    fn resampling_construction_keeps_order(seed in any::<u64>()) {
        let w = torus(LatticeKind::Square, 12);
        let s = HarrisSchedule::new(seed);
        let init = sample_initial(&w, 0.5, &s).unwrap();
        let v = w.origin_vertex();
        for policy in [CouplingPolicy::OnJointEvent, CouplingPolicy::WheneverOrdered] {
            let r = run_fixation_resample(&w, &init, s, v, ResampleParams { p: 0.5, t_bar: 1.0, horizon: 6.0, policy })
                .unwrap();
            if r.joint_event {
                prop_assert!(r.coupled);
                prop_assert!(r.companion_plus_from_zero);
                prop_assert!(r.companion_final_plus_fraction >= r.original_final_plus_fraction);
            }
        }
    }
}

#[test]
fn event_times_increase_and_rings_are_rate_one() {
    let w = torus(LatticeKind::Square, 16);
    let s = HarrisSchedule::new(11);
    let init = sample_initial(&w, 0.5, &s).unwrap();
    let (_, log) = run_logged(&w, &init, s, 50.0).unwrap();
    assert!(log.windows(2).all(|e| e[0].time <= e[1].time));
    let per_vertex = log.len() as f64 / (w.len() as f64 * 50.0);
    assert!((per_vertex - 1.0).abs() < 0.02, "ring rate {per_vertex}");
    // A ring flips exactly when its coin is below the rate.
    assert!(log.iter().all(|e| e.flipped == (e.uniform < e.rate.value())));
}

#[test]
fn frozen_hexagon_never_flips() {
    let w = build_lattice(LatticeKind::Hexagonal, 9, BoundarySpec::Free).unwrap();
    let report = search_frozen_set(&w, 6, u64::MAX).unwrap();
    let set: BTreeSet<usize> = report.witness.unwrap().set.into_iter().collect();
    assert_eq!(set.len(), 6);
    for seed in 0..10 {
        let s = HarrisSchedule::new(seed);
        let mut init = sample_initial(&w, 0.5, &s).unwrap();
        for &v in &set {
            init.spins[v] = 1;
        }
        let mut flips = FlipCounter::new(w.len(), &[]).unwrap();
        run(&w, &init, s, 500.0, &mut [&mut flips]).unwrap();
        assert!(set.iter().all(|&v| flips.counts()[v] == 0));
    }
}

#[test]
fn advance_is_right_continuous() {
    let w = torus(LatticeKind::Square, 8);
    let s = HarrisSchedule::new(4);
    let init = sample_initial(&w, 0.5, &s).unwrap();
    let (_, log) = run_logged(&w, &init, s, 3.0).unwrap();
    let flip = log.iter().find(|e| e.flipped).unwrap();
    let mut d = Dynamics::new(&w, &init, s).unwrap();
    d.advance_to(flip.time, &mut []);
    // The configuration at the event time already includes the flip.
    let mut replay = init.spins.clone();
    for e in log.iter().filter(|e| e.time <= flip.time && e.flipped) {
        replay[e.vertex as usize] *= -1;
    }
    assert_eq!(d.spins(), &replay[..]);
}
