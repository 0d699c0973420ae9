//! Translation and rotation invariance of finite windows, orbit classes,
//! and the rotation classes 𝒢(3), 𝒢(4), 𝒢(6).
//!
//! An infinite-graph statement can only be checked on the part of a window
//! that stays away from its rim. A vertex `v` is checked against a map `φ`
//! when both `v` and `φ(v)` are at Euclidean distance at least `margin`
//! from the boundary of the window's convex hull; for such `v` the image
//! must be a vertex and the edges at `v` must map onto the edges at `φ(v)`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3, Rotation};
use crate::plane_graph::PlaneGraph;
use crate::union_find::UnionFind;

/// `p ↦ R(p − c) + c + t`.
#[derive(Clone, Debug)]
pub struct Isometry {
    pub rotation: Rotation,
    pub center: Point,
    pub shift: Point,
}

impl Isometry {
    pub fn translation(t: Point) -> Self {
        Self { rotation: Rotation::of_order(1).expect("identity"), center: Point::origin(), shift: t }
    }

    pub fn rotation(order: u32, center: Point) -> Result<Self> {
        Ok(Self { rotation: Rotation::of_order(order)?, center, shift: Point::origin() })
    }

    pub fn apply(&self, p: &Point) -> Point {
        &p.rotate(&self.rotation, &self.center) + &self.shift
    }

    /// Offset `b` in the affine form `p ↦ Rp + b`.
    fn offset(&self) -> Point {
        self.apply(&Point::origin())
    }

    pub fn inverse(&self) -> Isometry {
        let r_inv = Rotation { order: self.rotation.order, cos: self.rotation.cos.clone(), sin: -&self.rotation.sin };
        let shift = -&self.offset().rotate(&r_inv, &Point::origin());
        Isometry { rotation: r_inv, center: Point::origin(), shift }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let (a, b) = (&self.rotation, &other.rotation);
        let rotation = Rotation {
            order: a.order.max(b.order),
            cos: &a.cos * &b.cos - &a.sin * &b.sin,
            sin: &a.sin * &b.cos + &a.cos * &b.sin,
        };
        Isometry { rotation, center: Point::origin(), shift: self.apply(&other.offset()) }
    }
}

/// Why a map failed to be a symmetry.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetryWitness {
    /// `φ(vertex)` lies inside the checked region but is not a vertex.
    MissingImage { vertex: usize, image: [f64; 2] },
    /// The edge `{vertex, neighbor}` has no image edge.
    EdgeNotMapped { vertex: usize, neighbor: usize },
    /// An edge at `φ(vertex)` does not come from an edge at `vertex`.
    EdgeNotReached { vertex: usize, image_neighbor: usize },
    /// No vertex was deep enough inside the window to check anything.
    NothingChecked,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub holds: bool,
    /// The vertex map alone: every checked vertex has a vertex image.
    pub vertex_map_ok: bool,
    /// Edges preserved both ways at every checked vertex whose image exists.
    pub edges_ok: bool,
    pub checked: usize,
    pub witness: Option<SymmetryWitness>,
}

/// Convex hull in floating point, used only to decide which vertices are
/// far enough from the rim to be checked.
#[derive(Clone, Debug)]
pub(crate) struct HullRegion {
    // (a, b, c) with a·x + b·y ≤ c inside, (a, b) a unit vector.
    halfplanes: Vec<(f64, f64, f64)>,
}

impl HullRegion {
    pub(crate) fn of_graph(g: &PlaneGraph) -> Self {
        let mut pts: Vec<[f64; 2]> = (0..g.len()).map(|v| g.coords(v)).collect();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        let hull = monotone_chain(&pts);
        let mut halfplanes = Vec::new();
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                continue;
            }
            // Counter-clockwise hull: the inside is to the left.
            let (a, b) = (dy / len, -dx / len);
            halfplanes.push((a, b, a * p[0] + b * p[1]));
        }
        Self { halfplanes }
    }

    /// Signed distance to the hull boundary, positive inside.
    pub(crate) fn depth(&self, p: [f64; 2]) -> f64 {
        if self.halfplanes.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.halfplanes.iter().map(|&(a, b, c)| c - (a * p[0] + b * p[1])).fold(f64::INFINITY, f64::min)
    }
}

fn monotone_chain(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-12 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-12 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Hull depth of every vertex, computed once per window.
pub(crate) struct Domain {
    pub(crate) hull: HullRegion,
    depth: Vec<f64>,
}

impl Domain {
    pub(crate) fn of_graph(g: &PlaneGraph) -> Self {
        let hull = HullRegion::of_graph(g);
        let depth = (0..g.len()).map(|v| hull.depth(g.coords(v))).collect();
        Self { hull, depth }
    }
}

/// Result of pushing the checked region through a map: the outcome and
/// the vertex pairs `(v, φ(v))` found along the way.
struct Scan {
    outcome: CheckOutcome,
    pairs: Vec<(usize, usize)>,
}

fn scan(g: &PlaneGraph, dom: &Domain, phi: &Isometry, margin: f64, stop_early: bool) -> Scan {
    let tol = 1e-9;
    let (c, s) = (phi.rotation.cos.to_f64(), phi.rotation.sin.to_f64());
    let (bx, by) = phi.apply(&Point::origin()).to_f64();
    let approx = |[x, y]: [f64; 2]| [c * x - s * y + bx, s * x + c * y + by];

    // Exact image ids, filled on demand.
    let mut image: Vec<Option<Option<usize>>> = vec![None; g.len()];
    let mut image_of = |v: usize| *image[v].get_or_insert_with(|| g.id_at(&phi.apply(g.position(v))));

    let mut checked = 0;
    let mut pairs = Vec::new();
    let mut vertex_witness = None;
    let mut edge_witness = None;
    for v in 0..g.len() {
        if dom.depth[v] < margin - tol || dom.hull.depth(approx(g.coords(v))) < margin - tol {
            continue;
        }
        checked += 1;
        let Some(w) = image_of(v) else {
            if vertex_witness.is_none() {
                let (x, y) = phi.apply(g.position(v)).to_f64();
                vertex_witness = Some(SymmetryWitness::MissingImage { vertex: v, image: [x, y] });
            }
            if stop_early {
                break;
            }
            continue;
        };
        pairs.push((v, w));
        if edge_witness.is_some() {
            continue;
        }
        // φ is injective, so φ(N(v)) ⊆ N(φ(v)) with equal degrees gives
        // equality: edges are preserved both ways.
        for &u in g.neighbors(v) {
            if !image_of(u).is_some_and(|fu| g.has_edge(w, fu)) {
                edge_witness = Some(SymmetryWitness::EdgeNotMapped { vertex: v, neighbor: u });
                break;
            }
        }
        if edge_witness.is_none() && g.degree(w) != g.degree(v) {
            let hit: Vec<usize> = g.neighbors(v).iter().filter_map(|&u| image_of(u)).collect();
            let x = g.neighbors(w).iter().copied().find(|x| !hit.contains(x)).expect("degree mismatch");
            edge_witness = Some(SymmetryWitness::EdgeNotReached { vertex: v, image_neighbor: x });
        }
        if stop_early && edge_witness.is_some() {
            break;
        }
    }
    let vertex_map_ok = vertex_witness.is_none();
    let edges_ok = edge_witness.is_none();
    let nothing = checked == 0;
    Scan {
        outcome: CheckOutcome {
            holds: vertex_map_ok && edges_ok && !nothing,
            vertex_map_ok,
            edges_ok,
            checked,
            witness: if nothing { Some(SymmetryWitness::NothingChecked) } else { vertex_witness.or(edge_witness) },
        },
        pairs,
    }
}

/// Checks a candidate symmetry on the interior of a window.
pub fn check_isometry(g: &PlaneGraph, phi: &Isometry, margin: f64) -> CheckOutcome {
    scan(g, &Domain::of_graph(g), phi, margin, false).outcome
}

pub fn check_translation(g: &PlaneGraph, x: &Point, margin: f64) -> CheckOutcome {
    check_isometry(g, &Isometry::translation(x.clone()), margin)
}

/// Checks invariance under rotation by `2π/a` about `center`.
///
/// Orders whose rotation leaves the field ℚ(√3) (`a = 5, 7, 8, …`) are
/// rejected: no locally finite vertex set invariant under two independent
/// translations admits them.
pub fn check_rotation(g: &PlaneGraph, a: u32, center: &Point, margin: f64) -> Result<CheckOutcome> {
    if !(1..=12).contains(&a) {
        return Err(Error::InvalidParameter(format!("rotation order must lie in 1..=12, got {a}")));
    }
    Ok(check_isometry(g, &Isometry::rotation(a, center.clone())?, margin))
}

/// Translation of least norm among differences of window vertices within
/// twice the longest declared translation, verified on the interior.
pub fn minimal_translation(g: &PlaneGraph, margin: f64) -> Result<Point> {
    minimal_translation_in(g, &Domain::of_graph(g), margin)
}

fn minimal_translation_in(g: &PlaneGraph, dom: &Domain, margin: f64) -> Result<Point> {
    if g.is_empty() {
        return Err(Error::InvalidParameter("empty graph has no translations".into()));
    }
    let radius = match g.declared_symmetry() {
        Some(s) if !s.translations.is_empty() => {
            2.0 * s.translations.iter().map(|t| t.norm2().to_f64().sqrt()).fold(0.0, f64::max)
        }
        _ => {
            let deepest = dom.depth.iter().copied().fold(0.0, f64::max);
            deepest / 2.0
        }
    };
    // Reference vertex: the deepest one.
    let reference = (0..g.len())
        .max_by(|&a, &b| dom.depth[a].total_cmp(&dom.depth[b]).then(b.cmp(&a)))
        .expect("non-empty");
    let r0 = g.position(reference).clone();
    let [rx, ry] = g.coords(reference);
    let mut candidates: Vec<(QSqrt3, Point)> = (0..g.len())
        .filter(|&v| v != reference)
        .filter(|&v| {
            let [x, y] = g.coords(v);
            ((x - rx).powi(2) + (y - ry).powi(2)).sqrt() <= radius + 1e-9
        })
        .map(|v| {
            let d = g.position(v) - &r0;
            (d.norm2(), d)
        })
        .collect();
    // Shortest first; among equals prefer horizontal, then pointing right.
    candidates.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.y.abs().cmp(&b.1.y.abs()))
            .then_with(|| b.1.x.cmp(&a.1.x))
            .then_with(|| a.1.y.cmp(&b.1.y))
    });
    for (_, d) in candidates {
        if scan(g, dom, &Isometry::translation(d.clone()), margin, true).outcome.holds {
            return Ok(d);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no translation within radius {radius:.3} verifies on the interior at margin {margin}"
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationCheck {
    pub vector: Point,
    pub approx: [f64; 2],
    pub outcome: CheckOutcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationCheck {
    pub order: u32,
    pub outcome: CheckOutcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// Checks hold up to this distance from the window rim.
    pub margin: f64,
    pub translations: Vec<TranslationCheck>,
    pub translation_ok: Vec<bool>,
    pub minimal_translation: Option<Point>,
    pub minimal_translation_norm: Option<f64>,
    pub rotation_center: Point,
    /// Orders tried, largest first.
    pub rotation_checks: Vec<RotationCheck>,
    /// Largest verified order among 6, 4, 3, 2.
    pub rotation_order: Option<u32>,
    /// Per-vertex orbit label (1-based), `None` outside the checked region.
    pub classes: Vec<Option<u32>>,
    pub class_count: usize,
    /// Vertices in the closed parallelogram spanned by `x̄` and `R_θ x̄`
    /// at the rotation centre; an upper bound on the number of classes.
    pub parallelogram_vertex_count: Option<usize>,
    /// Distinct labels among those vertices.
    pub parallelogram_class_count: Option<usize>,
    pub g_membership: Vec<String>,
    pub main_theorem_applicable: bool,
    pub notes: Vec<String>,
}

/// Verifies the declared symmetries, finds the largest rotation order and
/// computes orbit classes on the interior.
pub fn classify(g: &PlaneGraph, margin: f64) -> Result<SymmetryReport> {
    let sym = g
        .declared_symmetry()
        .ok_or_else(|| Error::InvalidParameter("classification needs declared symmetry".into()))?;
    let dom = Domain::of_graph(g);
    let mut notes = Vec::new();

    let mut unions: Vec<Vec<(usize, usize)>> = Vec::new();
    let translations: Vec<TranslationCheck> = sym
        .translations
        .iter()
        .map(|t| {
            let (x, y) = t.to_f64();
            let sc = scan(g, &dom, &Isometry::translation(t.clone()), margin, false);
            if sc.outcome.holds {
                unions.push(sc.pairs);
            }
            TranslationCheck { vector: t.clone(), approx: [x, y], outcome: sc.outcome }
        })
        .collect();
    let translation_ok: Vec<bool> = translations.iter().map(|t| t.outcome.holds).collect();
    let center = sym.center.clone();

    if !translation_ok.iter().any(|&b| b) {
        notes.push("no declared translation verified; classes left empty".into());
        return Ok(SymmetryReport {
            margin,
            translations,
            translation_ok,
            minimal_translation: None,
            minimal_translation_norm: None,
            rotation_center: center,
            rotation_checks: Vec::new(),
            rotation_order: None,
            classes: vec![None; g.len()],
            class_count: 0,
            parallelogram_vertex_count: None,
            parallelogram_class_count: None,
            g_membership: Vec::new(),
            main_theorem_applicable: false,
            notes,
        });
    }

    let mut rotation_pairs = Vec::new();
    let rotation_checks: Vec<RotationCheck> = [6, 4, 3, 2]
        .into_iter()
        .map(|order| {
            let phi = Isometry::rotation(order, center.clone()).expect("representable order");
            let sc = scan(g, &dom, &phi, margin, false);
            rotation_pairs.push(sc.pairs);
            RotationCheck { order, outcome: sc.outcome }
        })
        .collect();
    let rotation_order = rotation_checks.iter().find(|c| c.outcome.holds).map(|c| c.order);
    if let Some(i) = rotation_checks.iter().position(|c| c.outcome.holds) {
        unions.push(std::mem::take(&mut rotation_pairs[i]));
    }
    let verified = |k: u32| rotation_checks.iter().any(|c| c.order == k && c.outcome.holds);
    let mut g_membership = Vec::new();
    for k in [3, 4, 6] {
        if verified(k) {
            g_membership.push(format!("G({k})"));
        }
    }
    let main_theorem_applicable = verified(3) || verified(4);
    if rotation_order == Some(2) {
        notes.push("only rotation by π verified: classified, but the main theorem is not applicable".into());
    }

    let minimal = minimal_translation_in(g, &dom, margin).ok();

    // Orbit classes: close the checked region under the verified maps.
    // Each union is symmetric, so a translation's pairs also cover −t.
    let inside: Vec<bool> = dom.depth.iter().map(|&d| d >= margin - 1e-9).collect();
    let mut uf = UnionFind::new(g.len());
    for (v, w) in unions.into_iter().flatten() {
        uf.union(v, w);
    }
    let mut reps: Vec<usize> = (0..g.len()).filter(|&v| inside[v]).collect();
    reps.sort_by(|&a, &b| g.position(a).norm2().cmp(&g.position(b).norm2()).then(a.cmp(&b)));
    let mut root_label = std::collections::HashMap::new();
    for &v in &reps {
        let r = uf.find(v);
        let next = root_label.len() as u32 + 1;
        root_label.entry(r).or_insert(next);
    }
    let classes: Vec<Option<u32>> =
        (0..g.len()).map(|v| if inside[v] { root_label.get(&uf.find(v)).copied() } else { None }).collect();
    let class_count = root_label.len();

    let (parallelogram_vertex_count, parallelogram_class_count) = match (&minimal, rotation_order) {
        (Some(x), Some(a)) if a > 2 => {
            let y = x.rotate(&Rotation::of_order(a)?, &Point::origin());
            let det = x.cross(&y);
            let unit = QSqrt3::one();
            let zero = QSqrt3::zero();
            let mut count = 0;
            let mut labels = BTreeSet::new();
            let mut unlabelled = false;
            for v in 0..g.len() {
                let p = g.position(v) - &center;
                let s = &p.cross(&y) / &det;
                let t = &x.cross(&p) / &det;
                if s >= zero && s <= unit && t >= zero && t <= unit {
                    count += 1;
                    match classes[v] {
                        Some(l) => {
                            labels.insert(l);
                        }
                        None => unlabelled = true,
                    }
                }
            }
            if unlabelled {
                notes.push("parallelogram reaches outside the checked region; class count there is partial".into());
            }
            (Some(count), Some(labels.len()))
        }
        _ => (None, None),
    };

    Ok(SymmetryReport {
        margin,
        translations,
        translation_ok,
        minimal_translation_norm: minimal.as_ref().map(|m| m.norm2().to_f64().sqrt()),
        minimal_translation: minimal,
        rotation_center: center,
        rotation_checks,
        rotation_order,
        classes,
        class_count,
        parallelogram_vertex_count,
        parallelogram_class_count,
        g_membership,
        main_theorem_applicable,
        notes,
    })
}
