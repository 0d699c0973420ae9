//! Shrink and planar-shrink verdicts on finite windows.
//!
//! A set `S` is *shrink-violating* when every `u ∈ S` has more neighbours
//! inside `S` than outside. All degree counts here are true degrees of the
//! infinite graph, so every vertex of a tested set must keep its full
//! neighbourhood inside the window; sets touching the rim are refused.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3};
use crate::plane_graph::Window;

/// The line `a·x + b·y = c`, with `(a, b) ≠ 0`.
///
/// Side 1 is the closed half-plane `a·x + b·y ≥ c`, side 2 is `≤ c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Line {
    pub a: QSqrt3,
    pub b: QSqrt3,
    pub c: QSqrt3,
}

impl Line {
    pub fn new(a: QSqrt3, b: QSqrt3, c: QSqrt3) -> Result<Self> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::InvalidParameter("line needs a non-zero normal".into()));
        }
        Ok(Self { a, b, c })
    }

    pub fn through(p: &Point, q: &Point) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidParameter("line through a single point".into()));
        }
        let d = q - p;
        let (a, b) = (-&d.y, d.x);
        let c = &a * &p.x + &b * &p.y;
        Ok(Self { a, b, c })
    }

    /// The line through `p` with direction `d`.
    pub fn with_direction(p: &Point, d: &Point) -> Result<Self> {
        Self::through(p, &(p + d))
    }

    pub fn horizontal(y: QSqrt3) -> Self {
        Self { a: QSqrt3::zero(), b: QSqrt3::one(), c: y }
    }

    /// `a·x + b·y − c`; its sign tells the side.
    pub fn eval(&self, p: &Point) -> QSqrt3 {
        &(&self.a * &p.x + &self.b * &p.y) - &self.c
    }

    /// Coordinates after moving the line onto the x-axis with side 1 above
    /// it. Both coordinates are scaled by `|(a, b)|`, which keeps order.
    fn frame(&self, p: &Point) -> (QSqrt3, QSqrt3) {
        (&self.b * &p.x - &self.a * &p.y, self.eval(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreePair {
    pub vertex: usize,
    /// `deg_S(u)`.
    pub inside: usize,
    /// `deg_{V∖S}(u)`.
    pub outside: usize,
}

impl DegreePair {
    pub fn qualifies(&self) -> bool {
        self.outside >= self.inside
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SetVerdict {
    /// Some `u` has at least as many neighbours outside as inside.
    Qualifies { witness: DegreePair },
    /// Every listed vertex has more neighbours inside.
    Violation { degrees: Vec<DegreePair> },
}

impl SetVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, SetVerdict::Violation { .. })
    }
}

fn full_degree_ok(w: &Window, v: usize) -> bool {
    w.phantom(v) == 0 && w.neighbors(v).len() == w.graph().degree(v)
}

fn validate_set(w: &Window, s: &BTreeSet<usize>) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("S must be non-empty".into()));
    }
    for &v in s {
        if v >= w.len() {
            return Err(Error::UnknownVertex(v));
        }
        if !full_degree_ok(w, v) {
            return Err(Error::RimContact { vertex: v });
        }
    }
    Ok(())
}

fn degree_pair(w: &Window, s: &BTreeSet<usize>, u: usize) -> DegreePair {
    let nbrs = w.graph().neighbors(u);
    let inside = nbrs.iter().filter(|x| s.contains(x)).count();
    DegreePair { vertex: u, inside, outside: nbrs.len() - inside }
}

fn verdict_over(w: &Window, s: &BTreeSet<usize>, candidates: impl Iterator<Item = usize>) -> SetVerdict {
    let mut degrees = Vec::new();
    for u in candidates {
        let d = degree_pair(w, s, u);
        if d.qualifies() {
            return SetVerdict::Qualifies { witness: d };
        }
        degrees.push(d);
    }
    SetVerdict::Violation { degrees }
}

/// Looks for `u ∈ S` with `deg_{V∖S}(u) ≥ deg_S(u)`.
pub fn check_shrink_set(w: &Window, s: &BTreeSet<usize>) -> Result<SetVerdict> {
    validate_set(w, s)?;
    Ok(verdict_over(w, s, s.iter().copied()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SideVerdict {
    Empty,
    Qualifies { witness: DegreePair },
    Violation { degrees: Vec<DegreePair> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanarVerdict {
    /// `S ∩ {a·x + b·y ≥ c}` and `S ∩ {a·x + b·y ≤ c}`.
    pub sides: [BTreeSet<usize>; 2],
    pub verdicts: [SideVerdict; 2],
}

impl PlanarVerdict {
    pub fn is_violation(&self) -> bool {
        self.verdicts.iter().any(|v| matches!(v, SideVerdict::Violation { .. }))
    }
}

fn split(w: &Window, s: &BTreeSet<usize>, line: &Line) -> [BTreeSet<usize>; 2] {
    let mut sides = [BTreeSet::new(), BTreeSet::new()];
    for &v in s {
        let sign = line.eval(w.graph().position(v)).signum();
        if sign >= 0 {
            sides[0].insert(v);
        }
        if sign <= 0 {
            sides[1].insert(v);
        }
    }
    sides
}

/// Splits `S` by the closed half-planes of `line` and checks each non-empty
/// side, counting degrees against the whole of `S`.
pub fn check_planar_shrink_set(w: &Window, s: &BTreeSet<usize>, line: &Line) -> Result<PlanarVerdict> {
    validate_set(w, s)?;
    let sides = split(w, s, line);
    let verdicts = [0, 1].map(|i| {
        if sides[i].is_empty() {
            SideVerdict::Empty
        } else {
            match verdict_over(w, s, sides[i].iter().copied()) {
                SetVerdict::Qualifies { witness } => SideVerdict::Qualifies { witness },
                SetVerdict::Violation { degrees } => SideVerdict::Violation { degrees },
            }
        }
    });
    Ok(PlanarVerdict { sides, verdicts })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkProperty {
    Shrink,
    PlanarShrink,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkVerdict {
    HoldsOnWindow,
    Violated,
    /// Search budget ran out before the enumeration finished.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkWitness {
    pub set: Vec<usize>,
    pub positions: Vec<[f64; 2]>,
    pub line: Option<Line>,
    pub degrees: Vec<DegreePair>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStats {
    pub subsets_examined: u64,
    pub lines_examined: u64,
    pub max_size: usize,
    pub budget: u64,
    /// Only connected sets are enumerated, so `holds_on_window` is not a
    /// refutation of disconnected witnesses.
    pub connected_only: bool,
    pub candidate_vertices: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkReport {
    pub property: ShrinkProperty,
    pub verdict: ShrinkVerdict,
    pub witness: Option<ShrinkWitness>,
    pub search_stats: SearchStats,
}

/// Vertices allowed in enumerated sets: full degree and inside the
/// window's interior margin.
fn search_domain(w: &Window) -> Vec<bool> {
    (0..w.len()).map(|v| full_degree_ok(w, v) && w.is_interior(v)).collect()
}

/// Enumerates every connected subset of the allowed vertices with at most
/// `max_size` elements, each exactly once (ESU enumeration). The visitor
/// returns `false` to stop.
pub fn for_each_connected_set(
    w: &Window,
    allowed: &[bool],
    max_size: usize,
    mut visit: impl FnMut(&[usize]) -> bool,
) {
    fn extend(
        w: &Window,
        allowed: &[bool],
        max_size: usize,
        root: usize,
        sub: &mut Vec<usize>,
        in_sub: &mut [bool],
        near: &mut [u32],
        ext: Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if !visit(sub) {
            return false;
        }
        if sub.len() == max_size {
            return true;
        }
        let mut ext = ext;
        while let Some(x) = ext.pop() {
            // Exclusive neighbours of x: not in sub, not adjacent to sub.
            let mut next = ext.clone();
            for &u in w.graph().neighbors(x) {
                if u > root && allowed[u] && !in_sub[u] && near[u] == 0 && !next.contains(&u) {
                    next.push(u);
                }
            }
            sub.push(x);
            in_sub[x] = true;
            for &u in w.graph().neighbors(x) {
                near[u] += 1;
            }
            let go = extend(w, allowed, max_size, root, sub, in_sub, near, next, visit);
            for &u in w.graph().neighbors(x) {
                near[u] -= 1;
            }
            in_sub[x] = false;
            sub.pop();
            if !go {
                return false;
            }
        }
        true
    }

    if max_size == 0 {
        return;
    }
    let n = w.len();
    let mut in_sub = vec![false; n];
    let mut near = vec![0u32; n];
    let mut sub = Vec::with_capacity(max_size);
    for root in 0..n {
        if !allowed[root] {
            continue;
        }
        sub.push(root);
        in_sub[root] = true;
        for &u in w.graph().neighbors(root) {
            near[u] += 1;
        }
        let ext: Vec<usize> = w.graph().neighbors(root).iter().copied().filter(|&u| u > root && allowed[u]).collect();
        let go = extend(w, allowed, max_size, root, &mut sub, &mut in_sub, &mut near, ext, &mut visit);
        for &u in w.graph().neighbors(root) {
            near[u] -= 1;
        }
        in_sub[root] = false;
        sub.pop();
        if !go {
            return;
        }
    }
}

fn witness_of(w: &Window, s: &BTreeSet<usize>, line: Option<Line>, degrees: Vec<DegreePair>) -> ShrinkWitness {
    ShrinkWitness {
        set: s.iter().copied().collect(),
        positions: s.iter().map(|&v| w.graph().coords(v)).collect(),
        line,
        degrees,
    }
}

/// Exhaustive search over connected interior sets for a shrink violation.
pub fn search_frozen_set(w: &Window, max_size: usize, budget: u64) -> Result<ShrinkReport> {
    if max_size == 0 {
        return Err(Error::InvalidParameter("max_size must be at least 1".into()));
    }
    let allowed = search_domain(w);
    let mut examined = 0u64;
    let mut found = None;
    let mut exhausted = false;
    for_each_connected_set(w, &allowed, max_size, |sub| {
        if examined >= budget {
            exhausted = true;
            return false;
        }
        examined += 1;
        let s: BTreeSet<usize> = sub.iter().copied().collect();
        if let SetVerdict::Violation { degrees } = verdict_over(w, &s, s.iter().copied()) {
            found = Some(witness_of(w, &s, None, degrees));
            return false;
        }
        true
    });
    Ok(ShrinkReport {
        property: ShrinkProperty::Shrink,
        verdict: verdict_for(found.is_some(), exhausted),
        witness: found,
        search_stats: SearchStats {
            subsets_examined: examined,
            lines_examined: 0,
            max_size,
            budget,
            connected_only: true,
            candidate_vertices: allowed.iter().filter(|&&b| b).count(),
        },
    })
}

fn verdict_for(found: bool, exhausted: bool) -> ShrinkVerdict {
    if found {
        ShrinkVerdict::Violated
    } else if exhausted {
        ShrinkVerdict::Inconclusive
    } else {
        ShrinkVerdict::HoldsOnWindow
    }
}

/// Lines worth trying against a set: through every pair of its points,
/// and horizontal and vertical through each point. At most `limit`.
pub fn candidate_lines(w: &Window, s: &[usize], limit: usize) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    let g = w.graph();
    'outer: for (i, &u) in s.iter().enumerate() {
        let p = g.position(u);
        for d in [Point::int(1, 0), Point::int(0, 1)] {
            if out.len() >= limit {
                break 'outer;
            }
            out.push(Line::with_direction(p, &d).expect("non-zero direction"));
        }
        for &v in &s[i + 1..] {
            if out.len() >= limit {
                break 'outer;
            }
            out.push(Line::through(p, g.position(v)).expect("distinct vertices"));
        }
    }
    out
}

/// Like [`search_frozen_set`] for the planar shrink property: every
/// connected set is split by up to `lines_per_set` candidate lines.
pub fn search_planar_violation(w: &Window, max_size: usize, lines_per_set: usize, budget: u64) -> Result<ShrinkReport> {
    if max_size == 0 {
        return Err(Error::InvalidParameter("max_size must be at least 1".into()));
    }
    let allowed = search_domain(w);
    let mut examined = 0u64;
    let mut lines_examined = 0u64;
    let mut found = None;
    let mut exhausted = false;
    for_each_connected_set(w, &allowed, max_size, |sub| {
        if examined >= budget {
            exhausted = true;
            return false;
        }
        examined += 1;
        let s: BTreeSet<usize> = sub.iter().copied().collect();
        for line in candidate_lines(w, sub, lines_per_set) {
            lines_examined += 1;
            let v = check_planar_shrink_set(w, &s, &line).expect("search domain is rim-free");
            if v.is_violation() {
                let degrees = v
                    .verdicts
                    .iter()
                    .filter_map(|x| match x {
                        SideVerdict::Violation { degrees } => Some(degrees.clone()),
                        _ => None,
                    })
                    .next()
                    .unwrap_or_default();
                found = Some(witness_of(w, &s, Some(line), degrees));
                return false;
            }
        }
        true
    });
    Ok(ShrinkReport {
        property: ShrinkProperty::PlanarShrink,
        verdict: verdict_for(found.is_some(), exhausted),
        witness: found,
        search_stats: SearchStats {
            subsets_examined: examined,
            lines_examined,
            max_size,
            budget,
            connected_only: true,
            candidate_vertices: allowed.iter().filter(|&&b| b).count(),
        },
    })
}

/// Why a window fails the line-arrangement certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassHFailure {
    /// An interior vertex of odd degree.
    OddDegree { vertex: usize, degree: usize },
    /// The line through `{vertex, neighbor}` stops at `vertex`.
    LineNotContinued { vertex: usize, neighbor: usize },
    /// The collinear extension out of `S` is missing or lands in `S`.
    InjectionBroken { set: Vec<usize>, line: Line, vertex: usize, neighbor: usize },
    /// A sampled planar check reported a violation.
    PlanarViolation { set: Vec<usize>, line: Line },
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassHReport {
    pub certified: bool,
    /// Every edge is a closed straight segment (always true for this
    /// embedding model).
    pub p1_closed_segments: bool,
    /// Every edge line is covered by edges through the interior.
    pub p2_lines_tiled: bool,
    pub p3_max_degree: usize,
    pub even_degrees: bool,
    pub vertices_checked: usize,
    pub samples: usize,
    pub failure: Option<ClassHFailure>,
}

/// The neighbour of `u` on the ray opposite to `w`, if any.
fn opposite_neighbor(w: &Window, u: usize, nb: usize) -> Option<usize> {
    let g = w.graph();
    let pu = g.position(u);
    let d = g.position(nb) - pu;
    g.neighbors(u).iter().copied().find(|&x| {
        let e = g.position(x) - pu;
        e.cross(&d).is_zero() && e.dot(&d).is_negative()
    })
}

/// Chooses the vertex of the proof-style injection on one side: highest
/// above the line, then furthest along it.
fn top_vertex(w: &Window, side: &BTreeSet<usize>, line: &Line, upper: bool) -> Option<usize> {
    let key = |v: usize| {
        let (x, y) = line.frame(w.graph().position(v));
        if upper {
            (y, x)
        } else {
            (-y, -x)
        }
    };
    side.iter().copied().max_by(|&a, &b| key(a).cmp(&key(b)))
}

/// Checks the line-arrangement properties on the interior and then, for
/// `samples` random pairs of a connected set and a line, checks the
/// collinear-extension injection at the extreme vertex of each side.
pub fn certify_class_h(w: &Window, samples: usize, max_set: usize, seed: u64) -> Result<ClassHReport> {
    let g = w.graph();
    let interior: Vec<usize> = (0..w.len()).filter(|&v| full_degree_ok(w, v) && w.is_interior(v)).collect();
    if interior.is_empty() {
        return Err(Error::InvalidParameter("window has no full-degree interior vertex".into()));
    }
    let mut report = ClassHReport {
        certified: false,
        p1_closed_segments: true,
        p2_lines_tiled: true,
        p3_max_degree: g.max_degree(),
        even_degrees: true,
        vertices_checked: interior.len(),
        samples: 0,
        failure: None,
    };
    for &v in &interior {
        if g.degree(v) % 2 == 1 {
            report.even_degrees = false;
            report.failure.get_or_insert(ClassHFailure::OddDegree { vertex: v, degree: g.degree(v) });
        }
        for &u in g.neighbors(v) {
            if opposite_neighbor(w, v, u).is_none() {
                report.p2_lines_tiled = false;
                report.failure.get_or_insert(ClassHFailure::LineNotContinued { vertex: v, neighbor: u });
            }
        }
    }
    if report.failure.is_some() {
        return Ok(report);
    }

    // Sampled sets live where every vertex and its neighbours are full.
    let deep: Vec<bool> =
        (0..w.len()).map(|v| full_degree_ok(w, v) && w.is_interior(v) && g.neighbors(v).iter().all(|&u| full_degree_ok(w, u))).collect();
    let deep_list: Vec<usize> = (0..w.len()).filter(|&v| deep[v]).collect();
    if deep_list.is_empty() {
        return Err(Error::InvalidParameter("window too small to sample sets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let s = random_connected_set(w, &deep, &deep_list, max_set.max(1), &mut rng);
        let line = random_line(w, &s, &mut rng);
        report.samples += 1;
        let verdict = check_planar_shrink_set(w, &s, &line)?;
        if verdict.is_violation() {
            report.failure = Some(ClassHFailure::PlanarViolation { set: s.iter().copied().collect(), line });
            return Ok(report);
        }
        for (i, side) in verdict.sides.iter().enumerate() {
            let Some(u) = top_vertex(w, side, &line, i == 0) else { continue };
            let mut images = BTreeSet::new();
            for &nb in g.neighbors(u).iter().filter(|x| s.contains(x)) {
                match opposite_neighbor(w, u, nb) {
                    Some(x) if !s.contains(&x) && images.insert(x) => {}
                    _ => {
                        report.failure = Some(ClassHFailure::InjectionBroken {
                            set: s.iter().copied().collect(),
                            line,
                            vertex: u,
                            neighbor: nb,
                        });
                        return Ok(report);
                    }
                }
            }
        }
    }
    report.certified = true;
    Ok(report)
}

/// Grows a random connected set of size `1..=max_size` inside `allowed`.
pub fn random_connected_set(
    w: &Window,
    allowed: &[bool],
    allowed_list: &[usize],
    max_size: usize,
    rng: &mut impl Rng,
) -> BTreeSet<usize> {
    let target = rng.random_range(1..=max_size);
    let start = *allowed_list.choose(rng).expect("non-empty domain");
    let mut s = BTreeSet::from([start]);
    let mut frontier: Vec<usize> = Vec::new();
    while s.len() < target {
        frontier.clear();
        for &v in &s {
            frontier.extend(w.graph().neighbors(v).iter().copied().filter(|u| allowed[*u] && !s.contains(u)));
        }
        let Some(&next) = frontier.choose(rng) else { break };
        s.insert(next);
    }
    s
}

/// A random line: through two vertices of `S` or window vertices near it,
/// or through a vertex of `S` in a random small-integer direction.
pub fn random_line(w: &Window, s: &BTreeSet<usize>, rng: &mut impl Rng) -> Line {
    let g = w.graph();
    let members: Vec<usize> = s.iter().copied().collect();
    let p = g.position(*members.choose(rng).expect("non-empty set")).clone();
    if rng.random_bool(0.5) {
        let ring: Vec<usize> = members.iter().flat_map(|&v| g.neighbors(v).iter().copied()).chain(members.iter().copied()).collect();
        let q = g.position(*ring.choose(rng).expect("non-empty")).clone();
        if q != p {
            return Line::through(&p, &q).expect("distinct points");
        }
    }
    loop {
        let dx = rng.random_range(-3i64..=3);
        let dy = rng.random_range(-3i64..=3);
        if dx != 0 || dy != 0 {
            // Shift off the lattice sometimes so lines miss every vertex.
            let offset = if rng.random_bool(0.3) { QSqrt3::ratio(1, 3) } else { QSqrt3::zero() };
            let base = Point::new(&p.x + &offset, p.y.clone());
            return Line::with_direction(&base, &Point::int(dx, dy)).expect("non-zero direction");
        }
    }
}
