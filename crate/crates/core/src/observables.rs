//! Measurements on runs: clusters, flip counts, fixation path events,
//! crossings of the regions built in [`crate::geometry`], and full-ball
//! events.
//!
//! Spins are piecewise constant between events, so every time-indexed
//! event here is decided exactly from event times.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3};
use crate::geometry::{self, CrossingGeometry};
use crate::harris::{sample_initial, Dynamics, EventRecord, HarrisSchedule, Observer};
use crate::plane_graph::Window;
use crate::symmetry;
use crate::union_find::UnionFind;

/// `C_v(σ)`: the maximal connected same-spin set containing `v`.
pub fn cluster_at(w: &Window, spins: &[i8], v: usize) -> Result<BTreeSet<usize>> {
    if v >= w.len() {
        return Err(Error::UnknownVertex(v));
    }
    let mut seen = vec![false; w.len()];
    let mut out = BTreeSet::new();
    flood(w, spins, v, &mut seen, |u| {
        out.insert(u);
    });
    Ok(out)
}

/// `|C_v(σ)|` without building the set.
pub fn cluster_size_at(w: &Window, spins: &[i8], v: usize) -> Result<usize> {
    if v >= w.len() {
        return Err(Error::UnknownVertex(v));
    }
    let mut seen = vec![false; w.len()];
    let mut n = 0;
    flood(w, spins, v, &mut seen, |_| n += 1);
    Ok(n)
}

fn flood(w: &Window, spins: &[i8], v: usize, seen: &mut [bool], mut visit: impl FnMut(usize)) {
    let s = spins[v];
    let mut queue = VecDeque::from([v]);
    seen[v] = true;
    while let Some(x) = queue.pop_front() {
        visit(x);
        for &u in w.neighbors(x) {
            let u = u as usize;
            if !seen[u] && spins[u] == s {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
}

/// Same-spin component label per vertex, by union-find over all bonds.
/// Labels are the smallest vertex id of each cluster.
pub fn cluster_labels(w: &Window, spins: &[i8]) -> Vec<usize> {
    let n = w.len();
    let mut uf = UnionFind::new(n);
    for v in 0..n {
        for &u in w.neighbors(v) {
            if spins[u as usize] == spins[v] {
                uf.union(u as usize, v);
            }
        }
    }
    let mut smallest = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        smallest[r] = smallest[r].min(v);
    }
    (0..n).map(|v| smallest[uf.find(v)]).collect()
}

/// Runs every ring at times `≤ t` for each sample time and hands the
/// configuration at `t` to `sample`. Observers see every event up to the
/// horizon.
pub fn run_sampled(
    d: &mut Dynamics<'_>,
    times: &[f64],
    horizon: f64,
    observers: &mut [&mut dyn Observer],
    mut sample: impl FnMut(f64, &[i8]) -> Result<()>,
) -> Result<()> {
    check_times(times)?;
    if times.last().is_some_and(|&t| t > horizon) {
        return Err(Error::InvalidParameter(format!("sample times run past the horizon {horizon}")));
    }
    for o in observers.iter_mut() {
        o.on_start(d.spins(), d.time());
    }
    for &t in times {
        d.advance_to(t, observers);
        sample(t, d.spins())?;
    }
    d.advance_to(horizon, observers);
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("sample times must be finite and ≥ 0".into()));
    }
    if times.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub time: f64,
    pub observable: String,
    pub value: f64,
}

/// Measurements of one run, aligned with `sample_times`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub window: String,
    pub seed: u64,
    pub sample_times: Vec<f64>,
    pub records: Vec<SeriesRecord>,
}

impl ObservableSeries {
    pub fn values(&self, observable: &str) -> Vec<f64> {
        self.records.iter().filter(|r| r.observable == observable).map(|r| r.value).collect()
    }
}

/// `|C_O(σ_t)|` at each sample time of one run from a product-measure
/// start with density `p`.
pub fn cluster_growth_series(w: &Window, p: f64, seed: u64, times: &[f64]) -> Result<ObservableSeries> {
    let schedule = HarrisSchedule::new(seed);
    let init = sample_initial(w, p, &schedule)?;
    let mut d = Dynamics::new(w, &init, schedule)?;
    let origin = w.origin_vertex();
    let mut records = Vec::with_capacity(times.len());
    let horizon = times.last().copied().unwrap_or(0.0);
    run_sampled(&mut d, times, horizon, &mut [], |t, s| {
        records.push(SeriesRecord { time: t, observable: "cluster_origin".into(), value: cluster_size_at(w, s, origin)? as f64 });
        Ok(())
    })?;
    Ok(ObservableSeries { window: w.descriptor().to_string(), seed, sample_times: times.to_vec(), records })
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile; NaN on an empty sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Per-vertex flip counts, with snapshots at marked times.
#[derive(Clone, Debug)]
pub struct FlipCounter {
    counts: Vec<u64>,
    marks: Vec<f64>,
    snapshots: Vec<Vec<u64>>,
}

impl FlipCounter {
    pub fn new(n: usize, marks: &[f64]) -> Result<Self> {
        check_times(marks)?;
        Ok(Self { counts: vec![0; n], marks: marks.to_vec(), snapshots: Vec::new() })
    }

    /// Cumulative counts so far.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Takes the snapshots of every mark `≤ t` not yet taken. Call with
    /// the final time once the run is over.
    pub fn flush(&mut self, t: f64) {
        while self.snapshots.len() < self.marks.len() && self.marks[self.snapshots.len()] <= t {
            self.snapshots.push(self.counts.clone());
        }
    }

    /// Counts at each mark reached so far.
    pub fn snapshots(&self) -> &[Vec<u64>] {
        &self.snapshots
    }
}

impl Observer for FlipCounter {
    fn on_event(&mut self, e: &EventRecord, _spins: &[i8]) {
        // Events are processed at times > mark only after the snapshot.
        while self.snapshots.len() < self.marks.len() && self.marks[self.snapshots.len()] < e.time {
            self.snapshots.push(self.counts.clone());
        }
        if e.flipped {
            self.counts[e.vertex as usize] += 1;
        }
    }
}

/// Cumulative flip counts per vertex at each sample time of one run.
pub fn flip_counts(
    w: &Window,
    init: &crate::harris::SpinConfiguration,
    schedule: HarrisSchedule,
    times: &[f64],
) -> Result<Vec<Vec<u64>>> {
    let mut counter = FlipCounter::new(w.len(), times)?;
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut d = Dynamics::new(w, init, schedule)?;
    d.advance_to(horizon, &mut [&mut counter]);
    counter.flush(horizon);
    Ok(counter.snapshots)
}

/// Fraction of `vertices` whose count grew between two snapshots.
pub fn flipped_fraction(before: &[u64], after: &[u64], vertices: &[usize]) -> f64 {
    if vertices.is_empty() {
        return f64::NAN;
    }
    vertices.iter().filter(|&&v| after[v] > before[v]).count() as f64 / vertices.len() as f64
}

/// Records the first flip time of every vertex, which decides the path
/// events `A_v^±(t)` for every `t` at once.
#[derive(Clone, Debug)]
pub struct FixationTracker {
    initial: Vec<i8>,
    first_flip: Vec<f64>,
}

impl FixationTracker {
    pub fn new(n: usize) -> Self {
        Self { initial: vec![0; n], first_flip: vec![f64::INFINITY; n] }
    }

    /// The spin of `v` was `sign` on all of `[0, t]`.
    pub fn constant_on(&self, v: usize, sign: i8, t: f64) -> bool {
        self.initial[v] == sign && self.first_flip[v] > t
    }

    pub fn first_flip(&self, v: usize) -> f64 {
        self.first_flip[v]
    }
}

impl Observer for FixationTracker {
    fn on_start(&mut self, spins: &[i8], _time: f64) {
        self.initial.copy_from_slice(spins);
        self.first_flip.fill(f64::INFINITY);
    }

    fn on_event(&mut self, e: &EventRecord, _spins: &[i8]) {
        let v = e.vertex as usize;
        if e.flipped && self.first_flip[v].is_infinite() {
            self.first_flip[v] = e.time;
        }
    }
}

/// Counts of one class at one time for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixationTally {
    pub class: u32,
    pub size: usize,
    pub plus: usize,
    pub minus: usize,
}

/// Interior class sizes and constant-spin counts at time `t`.
pub fn fixation_tally(
    tracker: &FixationTracker,
    classes: &[Option<u32>],
    interior: &[bool],
    t: f64,
) -> Vec<FixationTally> {
    let mut by_class: BTreeMap<u32, FixationTally> = BTreeMap::new();
    for (v, c) in classes.iter().enumerate() {
        let Some(c) = *c else { continue };
        if !interior[v] {
            continue;
        }
        let e = by_class.entry(c).or_insert(FixationTally { class: c, size: 0, plus: 0, minus: 0 });
        e.size += 1;
        e.plus += tracker.constant_on(v, 1, t) as usize;
        e.minus += tracker.constant_on(v, -1, t) as usize;
    }
    by_class.into_values().collect()
}

/// `ρ̂_i^±(t)` averaged over replicas, with its Monte Carlo error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationRow {
    pub time: f64,
    pub class: u32,
    pub sign: i8,
    pub fraction: f64,
    /// Standard error of the mean over replicas.
    pub stderr: f64,
    pub replicas: usize,
    pub class_size: usize,
}

/// Replica-averaged fractions of interior class vertices whose spin was
/// constant `+1` (and `−1`) on `[0, t]`. Classes with no interior vertex
/// are left out with a warning.
pub fn fixation_fractions(
    trackers: &[FixationTracker],
    classes: &[Option<u32>],
    interior: &[bool],
    times: &[f64],
) -> Result<Vec<FixationRow>> {
    check_times(times)?;
    if classes.len() != interior.len() {
        return Err(Error::InvalidParameter("class and interior masks differ in length".into()));
    }
    let mut all_classes: BTreeSet<u32> = classes.iter().flatten().copied().collect();
    let interior_classes: BTreeSet<u32> =
        classes.iter().zip(interior).filter(|(_, &i)| i).filter_map(|(c, _)| *c).collect();
    all_classes.retain(|c| {
        let keep = interior_classes.contains(c);
        if !keep {
            log::warn!("class {c} has no interior vertex; omitted from fixation fractions");
        }
        keep
    });
    let mut rows = Vec::new();
    for &t in times {
        let tallies: Vec<Vec<FixationTally>> =
            trackers.iter().map(|tr| fixation_tally(tr, classes, interior, t)).collect();
        for &c in &all_classes {
            for sign in [1i8, -1] {
                let mut fr = Vec::with_capacity(trackers.len());
                let mut size = 0;
                for ts in &tallies {
                    let tally = ts.iter().find(|x| x.class == c).expect("same classes in every run");
                    size = tally.size;
                    let k = if sign == 1 { tally.plus } else { tally.minus };
                    fr.push(k as f64 / tally.size as f64);
                }
                let (mean, se) = mean_stderr(&fr);
                rows.push(FixationRow { time: t, class: c, sign, fraction: mean, stderr: se, replicas: fr.len(), class_size: size });
            }
        }
    }
    Ok(rows)
}

/// Mean and standard error of the mean (0 for fewer than two values).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Statistics margin for a window: none on a torus, `⌈2√horizon⌉` hops
/// from a free or fixed rim.
pub fn default_interior_margin(w: &Window, horizon: f64) -> f64 {
    if w.is_periodic() {
        0.0
    } else {
        (2.0 * horizon.max(0.0).sqrt()).ceil()
    }
}

/// Orbit classes of the window's vertices. Vertices too close to the hull
/// to be classified get `None`. A window whose symmetry cannot be
/// verified falls back to a single class.
pub fn window_classes(w: &Window) -> Result<Vec<Option<u32>>> {
    let g = w.graph();
    let Some(sym) = g.declared_symmetry() else {
        log::warn!("{} declares no symmetry; using a single class", w.descriptor());
        return Ok(vec![Some(0); w.len()]);
    };
    let margin = 2.0 * sym.translations.iter().map(|t| t.norm2().to_f64().sqrt()).fold(0.0, f64::max);
    let report = symmetry::classify(g, margin)?;
    if report.class_count == 0 {
        log::warn!("no verified translation on {}; using a single class", w.descriptor());
        return Ok(vec![Some(0); w.len()]);
    }
    Ok(report.classes)
}

/// Outcome of a crossing check at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossDetection {
    pub occurred: bool,
    /// Index `i` of the first cover centre that works (0-based).
    pub witness_i: Option<u32>,
    /// The `+1` cluster of `V ∩ T_{L+2r₁}` containing `U`, when there is one.
    pub cluster: BTreeSet<usize>,
    /// One cluster vertex from each ball `B(L·c_{i+kq}, 4L/q)`.
    pub witness_points: Vec<usize>,
    /// Whether `Conv(C̃ ∩ W_L) ∩ V` covers `V ∩ B(O, L/3)`; only evaluated
    /// on a cross.
    pub annulus_hull_covers_ball: Option<bool>,
}

/// Decides whether an `L`-cross of `+1` is present in `σ`.
///
/// On a cross, the hull of the witness points must contain `B(O, L/3)`;
/// a failure is an internal error.
pub fn detect_l_cross(w: &Window, spins: &[i8], geom: &CrossingGeometry) -> Result<CrossDetection> {
    let g = w.graph();
    if spins.len() != w.len() {
        return Err(Error::InvalidParameter("configuration does not match the window".into()));
    }
    let none = CrossDetection {
        occurred: false,
        witness_i: None,
        cluster: BTreeSet::new(),
        witness_points: Vec::new(),
        annulus_hull_covers_ball: None,
    };
    if geom.u.iter().any(|&v| spins[v] != 1) {
        return Ok(none);
    }
    let mut mask = vec![false; w.len()];
    for &v in &geom.outer_vertices {
        mask[v] = spins[v] == 1;
    }
    let labels = g.induced_components(&mask);
    let mut u = geom.u.iter();
    let label = labels[*u.next().expect("U is non-empty")];
    if label == usize::MAX || u.any(|&v| labels[v] != label) {
        return Ok(none);
    }
    let a = geom.a as usize;
    let q = geom.q as usize;
    for i in 0..q {
        let picks: Option<Vec<usize>> = (0..a)
            .map(|k| geom.ball_vertices[i + k * q].iter().copied().find(|&v| labels[v] == label))
            .collect();
        let Some(picks) = picks else { continue };
        let pts: Vec<Point> = picks.iter().map(|&v| g.position(v).clone()).collect();
        let third = &geom.l * &QSqrt3::ratio(1, 3);
        if !geometry::hull_contains_ball(&pts, &third) {
            return Err(Error::Assertion(format!(
                "cross with centre index {i} at L = {}: witness hull misses B(O, L/3)",
                geom.l_f64
            )));
        }
        let cluster: BTreeSet<usize> = geom.outer_vertices.iter().copied().filter(|&v| labels[v] == label).collect();
        let in_annulus: BTreeSet<usize> = cluster.intersection(&geom.w_l).copied().collect();
        let covers = if in_annulus.is_empty() {
            geom.inner_ball.is_empty()
        } else {
            let hull = geometry::conv_g(g, &in_annulus);
            geom.inner_ball.iter().all(|v| hull.contains(v))
        };
        return Ok(CrossDetection {
            occurred: true,
            witness_i: Some(i as u32),
            cluster,
            witness_points: picks,
            annulus_hull_covers_ball: Some(covers),
        });
    }
    Ok(none)
}

/// Watches a vertex set and records the maximal time intervals on which
/// all of it is `+1`. The count of `−1` vertices is updated per event.
#[derive(Clone, Debug)]
pub struct FullBallMonitor {
    member: Vec<bool>,
    size: usize,
    minus: usize,
    open: Option<f64>,
    intervals: Vec<(f64, f64)>,
    last_time: f64,
}

impl FullBallMonitor {
    pub fn new(n: usize, ball: &[usize]) -> Result<Self> {
        let mut member = vec![false; n];
        for &v in ball {
            if v >= n {
                return Err(Error::UnknownVertex(v));
            }
            member[v] = true;
        }
        let size = member.iter().filter(|&&m| m).count();
        Ok(Self { member, size, minus: 0, open: None, intervals: Vec::new(), last_time: 0.0 })
    }

    /// Ball vertices currently at `−1`.
    pub fn minus_count(&self) -> usize {
        self.minus
    }

    pub fn ball_size(&self) -> usize {
        self.size
    }

    /// Closed-open intervals `[s, e)` of all-`+1`; an interval still open
    /// ends at the last observed time (or `horizon` after [`Self::finish`]).
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut out = self.intervals.clone();
        if let Some(s) = self.open {
            out.push((s, self.last_time));
        }
        out
    }

    /// Marks the run as observed up to `horizon`.
    pub fn finish(&mut self, horizon: f64) {
        self.last_time = self.last_time.max(horizon);
    }

    /// `F^t_L`: the ball is all `+1` at some time in `(t, t+1)`.
    pub fn full_ball(&self, t: f64) -> Result<bool> {
        self.any_in(t, t + 1.0)
    }

    /// `D(L; t₁, t₂)`: `F^s_L` for some `s ∈ [t₁, t₂ − 1]`, i.e. the ball
    /// is all `+1` somewhere in `(t₁, t₂)`.
    pub fn d_event(&self, t1: f64, t2: f64) -> Result<bool> {
        if !(t2 > t1 + 1.0) {
            return Err(Error::InvalidParameter(format!("D-event needs t2 > t1 + 1, got [{t1}, {t2}]")));
        }
        self.any_in(t1, t2)
    }

    fn any_in(&self, lo: f64, hi: f64) -> Result<bool> {
        if hi > self.last_time {
            return Err(Error::InvalidParameter(format!(
                "run observed only up to {}, cannot decide up to {hi}",
                self.last_time
            )));
        }
        Ok(self.intervals().iter().any(|&(s, e)| s < hi && e > lo && e > s))
    }
}

impl Observer for FullBallMonitor {
    fn on_start(&mut self, spins: &[i8], time: f64) {
        self.minus = (0..spins.len()).filter(|&v| self.member[v] && spins[v] == -1).count();
        self.intervals.clear();
        self.open = (self.minus == 0).then_some(time);
        self.last_time = time;
    }

    fn on_event(&mut self, e: &EventRecord, spins: &[i8]) {
        self.last_time = e.time;
        let v = e.vertex as usize;
        if !e.flipped || !self.member[v] {
            return;
        }
        if spins[v] == 1 {
            self.minus -= 1;
            if self.minus == 0 {
                self.open = Some(e.time);
            }
        } else {
            if self.minus == 0 {
                let s = self.open.take().expect("an all-plus interval was open");
                self.intervals.push((s, e.time));
            }
            self.minus += 1;
        }
    }
}

/// Lower bound `(aq)^{−a} 2^{−a|U|}` on the crossing probability.
pub fn estimate_p_cross_bound(a: u32, q: u32, u_len: usize) -> Result<f64> {
    if a != 3 && a != 4 {
        return Err(Error::InvalidParameter(format!("crossings are defined for a ∈ {{3, 4}}, got {a}")));
    }
    if q < geometry::MIN_Q {
        return Err(Error::InvalidParameter(format!("q must be ≥ {}, got {q}", geometry::MIN_Q)));
    }
    if u_len == 0 {
        return Err(Error::InvalidParameter("U must be non-empty".into()));
    }
    Ok(geometry::p_cross(a, q, u_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harris::SpinConfiguration;
    use crate::plane_graph::{build_lattice, BoundarySpec, LatticeKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(extent: usize, b: BoundarySpec) -> Window {
        build_lattice(LatticeKind::Square, extent, b).unwrap()
    }

    #[test]
    fn trivial_clusters() {
        let w = square(3, BoundarySpec::Free);
        let plus = vec![1i8; w.len()];
        assert_eq!(cluster_at(&w, &plus, 0).unwrap().len(), 9);
        let checker: Vec<i8> = (0..w.len())
            .map(|v| {
                let [x, y] = w.graph().coords(v);
                if (x + y).rem_euclid(2.0) == 0.0 { 1 } else { -1 }
            })
            .collect();
        for v in 0..w.len() {
            assert_eq!(cluster_at(&w, &checker, v).unwrap().len(), 1);
        }
        let o = w.origin_vertex();
        let mut domino = vec![-1i8; w.len()];
        domino[o] = 1;
        domino[w.neighbors(o)[0] as usize] = 1;
        assert_eq!(cluster_size_at(&w, &domino, o).unwrap(), 2);
    }

    #[test]
    fn cluster_at_matches_labelling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (i, kind) in [LatticeKind::Square, LatticeKind::Hexagonal, LatticeKind::Triangular].iter().enumerate() {
            let w = build_lattice(*kind, 8, if i == 0 { BoundarySpec::Periodic } else { BoundarySpec::Free }).unwrap();
            for _ in 0..100 {
                let p = rng.random::<f64>();
                let s: Vec<i8> = (0..w.len()).map(|_| if rng.random::<f64>() < p { 1 } else { -1 }).collect();
                let labels = cluster_labels(&w, &s);
                let v = rng.random_range(0..w.len());
                let c = cluster_at(&w, &s, v).unwrap();
                let expect: BTreeSet<usize> = (0..w.len()).filter(|&u| labels[u] == labels[v]).collect();
                assert_eq!(c, expect);
            }
        }
    }

    #[test]
    fn p_cross_values() {
        assert_eq!(estimate_p_cross_bound(4, 24, 1).unwrap(), 1.0 / (96f64.powi(4) * 16.0));
        let want = (1.0 / 72f64).powi(3) * 0.125;
        assert!((estimate_p_cross_bound(3, 24, 1).unwrap() / want - 1.0).abs() < 1e-15);
        assert!(estimate_p_cross_bound(4, 24, 0).is_err());
        assert!(estimate_p_cross_bound(4, 23, 1).is_err());
        assert!(estimate_p_cross_bound(6, 24, 1).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn flip_counter_snapshots_are_cumulative() {
        let w = square(12, BoundarySpec::Periodic);
        let sch = HarrisSchedule::new(3);
        let init = sample_initial(&w, 0.5, &sch).unwrap();
        let snaps = flip_counts(&w, &init, sch, &[1.0, 5.0, 20.0]).unwrap();
        assert_eq!(snaps.len(), 3);
        for v in 0..w.len() {
            assert!(snaps[0][v] <= snaps[1][v] && snaps[1][v] <= snaps[2][v]);
        }
        let (_, log) = crate::harris::run_logged(&w, &init, sch, 20.0).unwrap();
        for (k, &t) in [1.0, 5.0, 20.0].iter().enumerate() {
            let mut c = vec![0u64; w.len()];
            for e in log.iter().filter(|e| e.time <= t && e.flipped) {
                c[e.vertex as usize] += 1;
            }
            assert_eq!(c, snaps[k]);
        }
        let zeros = flip_counts(&w, &SpinConfiguration::constant(w.len(), 1), sch, &[10.0]).unwrap();
        assert!(zeros[0].iter().all(|&c| c == 0));
    }

    #[test]
    fn fixation_fractions_trivial_and_monotone() {
        let w = square(10, BoundarySpec::Periodic);
        let classes = vec![Some(0); w.len()];
        let interior = vec![true; w.len()];
        let times = [0.5, 1.0, 5.0, 10.0];
        let mut trackers = Vec::new();
        for seed in 0..4 {
            let sch = HarrisSchedule::new(seed);
            let init = sample_initial(&w, 0.5, &sch).unwrap();
            let mut tr = FixationTracker::new(w.len());
            crate::harris::run(&w, &init, sch, 10.0, &mut [&mut tr]).unwrap();
            trackers.push(tr);
        }
        let rows = fixation_fractions(&trackers, &classes, &interior, &times).unwrap();
        for sign in [1, -1] {
            let f: Vec<f64> = rows.iter().filter(|r| r.sign == sign).map(|r| r.fraction).collect();
            assert!(f.windows(2).all(|p| p[1] <= p[0]), "{f:?}");
        }
        let mut tr = FixationTracker::new(w.len());
        crate::harris::run(&w, &SpinConfiguration::constant(w.len(), 1), HarrisSchedule::new(1), 10.0, &mut [&mut tr])
            .unwrap();
        let rows = fixation_fractions(&[tr], &classes, &interior, &times).unwrap();
        assert!(rows.iter().all(|r| r.fraction == if r.sign == 1 { 1.0 } else { 0.0 }));
    }

    /// Rescans the ball after every event and compares with the monitor.
    struct Rescan<'a> {
        ball: &'a [usize],
        monitor: FullBallMonitor,
        checks: usize,
    }

    impl Observer for Rescan<'_> {
        fn on_start(&mut self, spins: &[i8], time: f64) {
            self.monitor.on_start(spins, time);
        }
        fn on_event(&mut self, e: &EventRecord, spins: &[i8]) {
            self.monitor.on_event(e, spins);
            let brute = self.ball.iter().filter(|&&v| spins[v] == -1).count();
            assert_eq!(brute, self.monitor.minus_count());
            self.checks += 1;
        }
    }

    #[test]
    fn full_ball_incremental_matches_rescan() {
        let w = square(9, BoundarySpec::Periodic);
        let ball: Vec<usize> = (0..w.len()).filter(|&v| w.graph().position(v).norm2() <= QSqrt3::int(4)).collect();
        for seed in 0..20 {
            let sch = HarrisSchedule::new(seed);
            let init = sample_initial(&w, 0.7, &sch).unwrap();
            let mut r = Rescan { ball: &ball, monitor: FullBallMonitor::new(w.len(), &ball).unwrap(), checks: 0 };
            crate::harris::run(&w, &init, sch, 30.0, &mut [&mut r]).unwrap();
            assert!(r.checks > 0);
            r.monitor.finish(30.0);
            // Nested windows.
            for t2 in [5.0, 10.0, 20.0, 30.0] {
                if r.monitor.d_event(0.0, t2).unwrap() {
                    assert!(r.monitor.d_event(0.0, 30.0).unwrap());
                }
            }
        }
    }

    #[test]
    fn full_ball_trivial_cases() {
        let w = square(9, BoundarySpec::Periodic);
        let ball = vec![w.origin_vertex()];
        for (p, expect) in [(1.0, true), (0.0, false)] {
            let sch = HarrisSchedule::new(2);
            let init = sample_initial(&w, p, &sch).unwrap();
            let mut m = FullBallMonitor::new(w.len(), &ball).unwrap();
            crate::harris::run(&w, &init, sch, 10.0, &mut [&mut m]).unwrap();
            m.finish(10.0);
            assert_eq!(m.d_event(0.0, 10.0).unwrap(), expect);
            assert_eq!(m.full_ball(3.0).unwrap(), expect);
        }
        let m = FullBallMonitor::new(w.len(), &ball).unwrap();
        assert!(m.d_event(0.0, 0.5).is_err());
    }

    #[test]
    fn l_cross_trivial_and_arms() {
        let w = square(64, BoundarySpec::Free);
        let l = QSqrt3::int(20);
        let geom = geometry::build_crossing_geometry(&w, 4, &l, 24).unwrap();
        let plus = vec![1i8; w.len()];
        let d = detect_l_cross(&w, &plus, &geom).unwrap();
        assert!(d.occurred);
        assert_eq!(d.witness_i, Some(0));
        let minus = vec![-1i8; w.len()];
        assert!(!detect_l_cross(&w, &minus, &geom).unwrap().occurred);

        // U plus four straight lattice arms from the origin to the
        // side midpoints L·c_{12+24k}.
        let mut s = vec![-1i8; w.len()];
        for &v in &geom.u {
            s[v] = 1;
        }
        let g = w.graph();
        let o = Point::origin();
        for k in 0..4 {
            let end = geom.cover[12 + k * 24].scale(&l);
            for v in 0..g.len() {
                let p = g.position(v);
                if Point::orient(&o, &end, p) == 0 && (p - &o).dot(&(p - &end)) <= QSqrt3::zero() {
                    s[v] = 1;
                }
            }
        }
        assert_eq!(s.iter().filter(|&&x| x == 1).count(), 1 + 4 * 20);
        let d = detect_l_cross(&w, &s, &geom).unwrap();
        assert!(d.occurred, "arms configuration should cross");
        assert_eq!(d.witness_points.len(), 4);
    }
}
