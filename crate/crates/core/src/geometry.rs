//! Crossing geometry: the rotation-invariant seed set `U`, the regions
//! `T_L(a)`, the ball cover of `∂T_1(a)`, the annulus `W_L`, and exact
//! hull tests.
//!
//! Everything that enters a containment claim is exact in ℚ(√3). Floats
//! are used only to skip obviously-far candidates before an exact test.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3, Rotation};
use crate::plane_graph::{PlaneGraph, Window};
use crate::symmetry;

/// Smallest admissible cover resolution: `1/2 − 4/q ≥ 1/3`.
pub const MIN_Q: u32 = 24;

fn check_order(a: u32) -> Result<()> {
    match a {
        3 | 4 => Ok(()),
        2 => Err(Error::InvalidParameter(
            "a = 2: the hull of two points is a segment and contains no ball".into(),
        )),
        _ => Err(Error::InvalidParameter(format!("crossing geometry needs a ∈ {{3, 4}}, got {a}"))),
    }
}

/// `T_s(a)`: the equilateral triangle (a = 3) or square (a = 4) with
/// inradius `s` centred at the origin, one edge on the line `y = s`.
#[derive(Clone, Debug, Serialize)]
pub struct Polygon {
    pub a: u32,
    pub size: QSqrt3,
    /// `P_1, …, P_a`, counter-clockwise from `P_1 = (s·tan(π/a), s)`.
    pub corners: Vec<Point>,
    pub corners_f64: Vec<[f64; 2]>,
    #[serde(skip)]
    normals: Vec<Point>,
}

impl Polygon {
    /// Exact membership, boundary included.
    pub fn contains(&self, p: &Point) -> bool {
        self.normals.iter().all(|n| n.dot(p) <= self.size)
    }

    /// Largest `n_i · p`; the point lies in `T_s` iff this is at most `s`.
    pub fn gauge(&self, p: &Point) -> QSqrt3 {
        self.normals.iter().map(|n| n.dot(p)).max().expect("a ≥ 3 normals")
    }

    fn gauge_f64(&self, p: [f64; 2]) -> f64 {
        self.normals
            .iter()
            .map(|n| {
                let (x, y) = n.to_f64();
                x * p[0] + y * p[1]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn contains_f64_filtered(&self, p: &Point, approx: [f64; 2]) -> bool {
        let g = self.gauge_f64(approx);
        let s = self.size.to_f64();
        if g > s + 1e-9 {
            false
        } else if g < s - 1e-9 {
            true
        } else {
            self.contains(p)
        }
    }
}

pub fn build_region(a: u32, size: &QSqrt3) -> Result<Polygon> {
    check_order(a)?;
    if size.is_negative() {
        return Err(Error::InvalidParameter(format!("region size must be non-negative, got {size}")));
    }
    let rot = Rotation::of_order(a)?;
    let tan_half = if a == 4 { QSqrt3::one() } else { QSqrt3::sqrt3() };
    let p1 = Point::new(&tan_half * size, size.clone());
    let mut corners = vec![p1];
    let mut normals = vec![Point::int(0, 1)];
    for i in 1..a as usize {
        corners.push(corners[i - 1].rotate(&rot, &Point::origin()));
        normals.push(normals[i - 1].rotate(&rot, &Point::origin()));
    }
    let corners_f64 = corners.iter().map(|p| { let (x, y) = p.to_f64(); [x, y] }).collect();
    Ok(Polygon { a, size: size.clone(), corners, corners_f64, normals })
}

/// `a·q` centres equally spaced by arc length along `∂T_1(a)`, starting at
/// `P_1`, so that `c_{i+mq} = R_{mθ}(c_i)`.
pub fn build_cover(a: u32, q: u32) -> Result<Vec<Point>> {
    check_order(a)?;
    if q < MIN_Q {
        return Err(Error::InvalidParameter(format!("q must be at least {MIN_Q}, got {q}")));
    }
    let t1 = build_region(a, &QSqrt3::one())?;
    let mut centers = Vec::with_capacity((a * q) as usize);
    for side in 0..a as usize {
        let p = &t1.corners[side];
        let d = &t1.corners[(side + 1) % a as usize] - p;
        for j in 0..q as i64 {
            centers.push(p + &d.scale(&QSqrt3::ratio(j, q as i64)));
        }
    }
    Ok(centers)
}

/// Radius `4/q` of the cover balls.
pub fn cover_radius(q: u32) -> QSqrt3 {
    QSqrt3::ratio(4, q as i64)
}

/// Exact convex hull (counter-clockwise, collinear points dropped).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && Point::orient(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && Point::orient(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True iff the convex hull of `points` contains the closed disk of the
/// given radius about the origin. Decided exactly.
pub fn hull_contains_ball(points: &[Point], radius: &QSqrt3) -> bool {
    hull_contains_ball_at(points, &Point::origin(), radius)
}

pub fn hull_contains_ball_at(points: &[Point], center: &Point, radius: &QSqrt3) -> bool {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        // A point or a segment contains no disk of positive radius.
        return radius.is_zero() && segment_contains(&hull, center);
    }
    let r2 = radius.square();
    (0..hull.len()).all(|i| {
        let p = &hull[i];
        let q = &hull[(i + 1) % hull.len()];
        let e = q - p;
        let side = e.cross(&(center - p));
        // Inside (left of every edge) and at distance ≥ r from its line.
        !side.is_negative() && side.square() >= &r2 * &e.norm2()
    })
}

fn segment_contains(hull: &[Point], p: &Point) -> bool {
    match hull {
        [] => false,
        [a] => a == p,
        [a, b, ..] => {
            Point::orient(a, b, p) == 0 && (p - a).dot(&(p - b)) <= QSqrt3::zero()
        }
    }
}

/// `Conv(S) ∩ V`: vertices inside or on the convex hull of `S`.
pub fn conv_g(g: &PlaneGraph, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let pts: Vec<Point> = s.iter().map(|&v| g.position(v).clone()).collect();
    let hull = convex_hull(&pts);
    if hull.len() < 3 {
        return (0..g.len()).filter(|&v| segment_contains(&hull, g.position(v))).collect();
    }
    let hull_f: Vec<[f64; 2]> = hull.iter().map(|p| { let (x, y) = p.to_f64(); [x, y] }).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &hull {
        let (x, y) = p.to_f64();
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    }
    (0..g.len())
        .filter(|&v| {
            let [x, y] = g.coords(v);
            x >= lo[0] - 1e-9 && x <= hi[0] + 1e-9 && y >= lo[1] - 1e-9 && y <= hi[1] + 1e-9
        })
        .filter(|&v| {
            let [x, y] = g.coords(v);
            (0..hull.len()).all(|i| {
                let j = (i + 1) % hull.len();
                let (ex, ey) = (hull_f[j][0] - hull_f[i][0], hull_f[j][1] - hull_f[i][1]);
                let (px, py) = (x - hull_f[i][0], y - hull_f[i][1]);
                let cross = ex * py - ey * px;
                // Decide in floats unless the point is close to the edge line.
                let tol = 1e-9 * (ex.abs() + ey.abs()) * (px.abs() + py.abs() + 1.0);
                if cross > tol {
                    true
                } else if cross < -tol {
                    false
                } else {
                    Point::orient(&hull[i], &hull[j], g.position(v)) >= 0
                }
            })
        })
        .collect()
}

/// Images of a vertex set under the powers of a rotation about the origin.
fn rotation_closure(g: &PlaneGraph, set: &BTreeSet<usize>, a: u32) -> Result<BTreeSet<usize>> {
    let rot = Rotation::of_order(a)?;
    let mut out = BTreeSet::new();
    for &v in set {
        let mut p = g.position(v).clone();
        for _ in 0..a {
            let id = g.id_at(&p).ok_or_else(|| {
                let (x, y) = p.to_f64();
                Error::InvalidParameter(format!("rotated image ({x:.3}, {y:.3}) of vertex {v} lies outside the window"))
            })?;
            out.insert(id);
            p = p.rotate(&rot, &Point::origin());
        }
    }
    Ok(out)
}

fn rotation_invariant(g: &PlaneGraph, set: &BTreeSet<usize>, a: u32) -> bool {
    let rot = Rotation::of_order(a).expect("checked order");
    set.iter()
        .all(|&v| g.id_at(&g.position(v).rotate(&rot, &Point::origin())).is_some_and(|w| set.contains(&w)))
}

fn require_origin_center(g: &PlaneGraph) -> Result<()> {
    if let Some(s) = g.declared_symmetry() {
        if s.center != Point::origin() {
            return Err(Error::InvalidParameter("crossing geometry expects the rotation centre at the origin".into()));
        }
    }
    Ok(())
}

/// `{O}` when the origin is a vertex; otherwise the rotation orbit of a
/// shortest path from a nearest vertex `ṽ` to `R_θ(ṽ)`.
pub fn build_u(g: &PlaneGraph, a: u32) -> Result<BTreeSet<usize>> {
    require_origin_center(g)?;
    let rot = Rotation::of_order(a)?;
    if let Some(o) = g.id_at(&Point::origin()) {
        return Ok(BTreeSet::from([o]));
    }
    let nearest = (0..g.len())
        .min_by(|&x, &y| g.position(x).norm2().cmp(&g.position(y).norm2()).then(x.cmp(&y)))
        .ok_or_else(|| Error::InvalidParameter("empty graph".into()))?;
    let target = g
        .id_at(&g.position(nearest).rotate(&rot, &Point::origin()))
        .ok_or_else(|| Error::InvalidParameter("rotated nearest vertex is not a vertex".into()))?;
    let path = g
        .shortest_path(nearest, target, |_| true)
        .ok_or_else(|| Error::InvalidParameter("nearest vertex and its rotation are disconnected".into()))?;
    let u = rotation_closure(g, &path.into_iter().collect(), a)?;
    if !g.is_connected_set(&u) || !rotation_invariant(g, &u, a) {
        return Err(Error::Assertion("U is not a connected rotation-invariant set".into()));
    }
    Ok(u)
}

/// Smallest multiple of 1/4 whose square is at least `d2`.
fn quarter_ceil_sqrt(d2: &QSqrt3) -> QSqrt3 {
    let mut k = (4.0 * d2.to_f64().max(0.0).sqrt()).ceil() as i64;
    while QSqrt3::ratio(k, 4).square() < *d2 {
        k += 1;
    }
    while k > 0 && QSqrt3::ratio(k - 1, 4).square() >= *d2 {
        k -= 1;
    }
    QSqrt3::ratio(k, 4)
}

#[derive(Clone, Debug, Serialize)]
pub struct Annulus {
    pub w_l: BTreeSet<usize>,
    pub r1: QSqrt3,
    pub r1_f64: f64,
    pub v0: usize,
    pub k_max: usize,
    pub u0: BTreeSet<usize>,
    pub notes: Vec<String>,
}

/// Builds `W_L` from the top-left class-1 vertex `v_0` of `T_L(a)`.
///
/// `x_bar` is the (horizontal) minimal translation and `classes` the
/// orbit labels; the constants of the unit-spacing construction are
/// scaled by `r = |x̄|`.
pub fn build_annulus(
    g: &PlaneGraph,
    a: u32,
    l: &QSqrt3,
    x_bar: &Point,
    classes: &[Option<u32>],
) -> Result<Annulus> {
    check_order(a)?;
    require_origin_center(g)?;
    if !x_bar.y.is_zero() || !x_bar.x.is_positive() {
        return Err(Error::InvalidParameter("the annulus construction needs a translation along +x".into()));
    }
    let r = x_bar.x.clone();
    let two_r = &r + &r;
    let region = build_region(a, l)?;
    let mut notes = Vec::new();

    let class_one: Vec<usize> = (0..g.len()).filter(|&v| classes[v] == Some(1)).collect();
    let v0 = class_one
        .iter()
        .copied()
        .filter(|&v| region.contains(g.position(v)))
        .max_by(|&x, &y| {
            let (px, py) = (g.position(x), g.position(y));
            px.y.cmp(&py.y).then_with(|| py.x.cmp(&px.x))
        })
        .ok_or_else(|| Error::InvalidParameter(format!("T_L(a) holds no class-1 vertex at L = {}", l.to_f64())))?;
    let p0 = g.position(v0).clone();
    let mut k_max = 0;
    while region.contains(&(&p0 + &x_bar.scale(&QSqrt3::int(k_max as i64 + 1)))) {
        k_max += 1;
    }
    let v_kmax = &p0 + &x_bar.scale(&QSqrt3::int(k_max as i64));
    let rot = Rotation::of_order(a)?;

    // U_0 ⊇ V_1 ∩ B(v_0, 2r), plus R_θ(v_kmax) so consecutive rotated
    // copies of the strip meet, then closed under shortest paths.
    let mut seed: BTreeSet<usize> =
        class_one.iter().copied().filter(|&v| (g.position(v) - &p0).norm2() <= two_r.square()).collect();
    let joint = g
        .id_at(&v_kmax.rotate(&rot, &Point::origin()))
        .ok_or_else(|| Error::InvalidParameter("R_θ(v_kmax) lies outside the window".into()))?;
    if seed.insert(joint) {
        notes.push(format!(
            "R_θ(v_kmax) at distance {:.3} from v_0 added to U_0",
            (g.position(joint) - &p0).norm2().to_f64().sqrt()
        ));
    }
    let four_r2 = (&two_r + &two_r).square();
    let u0 = connect(g, seed, v0, |v| (g.position(v) - &p0).norm2() <= four_r2, &mut notes)?;
    let far = u0.iter().map(|&v| (g.position(v) - &p0).norm2()).max().expect("non-empty");
    let r1 = quarter_ceil_sqrt(&far).max(two_r.clone());

    let mut strip = BTreeSet::new();
    for k in 0..=k_max {
        let shift = x_bar.scale(&QSqrt3::int(k as i64));
        for &v in &u0 {
            let p = g.position(v) + &shift;
            let id = g
                .id_at(&p)
                .ok_or_else(|| Error::InvalidParameter("translated U_0 leaves the window".into()))?;
            strip.insert(id);
        }
    }
    let w_l = rotation_closure(g, &strip, a)?;

    if !g.is_connected_set(&w_l) {
        return Err(Error::Assertion("W_L is not connected".into()));
    }
    if !rotation_invariant(g, &w_l, a) {
        return Err(Error::Assertion("W_L is not rotation invariant".into()));
    }
    let two_r1 = &r1 + &r1;
    let outer = build_region(a, &(l + &two_r1))?;
    let inner_size = l - &two_r1;
    for &v in &w_l {
        let p = g.position(v);
        let in_inner = !inner_size.is_negative() && region_with(&region, &inner_size).contains(p);
        if !outer.contains(p) || in_inner {
            return Err(Error::Assertion(format!("W_L vertex {v} lies outside T_(L+2r1) \\ T_(L-2r1)")));
        }
    }
    Ok(Annulus { w_l, r1_f64: r1.to_f64(), r1, v0, k_max, u0, notes })
}

fn region_with(template: &Polygon, size: &QSqrt3) -> Polygon {
    build_region(template.a, size).expect("order already checked")
}

/// Joins every component of `seed` to the component of `root` by shortest
/// paths, first inside `near`, then anywhere.
fn connect(
    g: &PlaneGraph,
    mut set: BTreeSet<usize>,
    root: usize,
    near: impl Fn(usize) -> bool,
    notes: &mut Vec<String>,
) -> Result<BTreeSet<usize>> {
    loop {
        let mut mask = vec![false; g.len()];
        for &v in &set {
            mask[v] = true;
        }
        let labels = g.induced_components(&mask);
        let Some(&stray) = set.iter().find(|&&v| labels[v] != labels[root]) else {
            return Ok(set);
        };
        let path = g.shortest_path(root, stray, &near).or_else(|| {
            notes.push("U_0 needed a connecting path beyond B(v_0, 4r)".into());
            g.shortest_path(root, stray, |_| true)
        });
        let path = path.ok_or_else(|| Error::InvalidParameter("class-1 vertices near v_0 are disconnected".into()))?;
        set.extend(path);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossingGeometry {
    pub a: u32,
    pub l: QSqrt3,
    pub l_f64: f64,
    pub q: u32,
    pub x_bar: Point,
    pub r: f64,
    pub r1: QSqrt3,
    pub r1_f64: f64,
    pub region: Polygon,
    pub region_outer: Polygon,
    pub region_inner: Option<Polygon>,
    pub u: BTreeSet<usize>,
    pub u0: BTreeSet<usize>,
    pub v0: usize,
    pub w_l: BTreeSet<usize>,
    /// Unit-scale centres `c_0 … c_{aq−1}` on `∂T_1(a)`.
    pub cover: Vec<Point>,
    /// Vertices of `V ∩ T_{L+2r₁}(a)`.
    pub outer_vertices: Vec<usize>,
    /// For each centre `j`, the vertices of `V ∩ T_{L+2r₁}` in
    /// `B(L·c_j, 4L/q)`.
    pub ball_vertices: Vec<Vec<usize>>,
    /// Vertices of `V ∩ B(O, L/3)`.
    pub inner_ball: Vec<usize>,
    pub p_cross: f64,
    pub notes: Vec<String>,
}

/// Lower bound `(aq)^{−a} · 2^{−a|U|}` on the probability of infinitely
/// many crossings.
pub fn p_cross(a: u32, q: u32, u_len: usize) -> f64 {
    let aq = (a * q) as f64;
    aq.powi(-(a as i32)) * 0.5f64.powi((a as usize * u_len) as i32)
}

/// Everything a crossing detector needs for one window and size `L`.
pub fn build_crossing_geometry(w: &Window, a: u32, l: &QSqrt3, q: u32) -> Result<CrossingGeometry> {
    check_order(a)?;
    let g = w.graph();
    require_origin_center(g)?;
    let declared = g
        .declared_symmetry()
        .ok_or_else(|| Error::InvalidParameter("crossing geometry needs declared symmetry".into()))?;
    let longest = declared.translations.iter().map(|t| t.norm2().to_f64().sqrt()).fold(0.0, f64::max);
    let report = symmetry::classify(g, 2.0 * longest)?;
    if !report.rotation_checks.iter().any(|c| c.order == a && c.outcome.holds) {
        return Err(Error::InvalidParameter(format!("rotation of order {a} does not verify on this window")));
    }
    let x_bar = report
        .minimal_translation
        .clone()
        .ok_or_else(|| Error::InvalidParameter("no verified translation".into()))?;
    let mut notes = report.notes.clone();

    let u = build_u(g, a)?;
    let ann = build_annulus(g, a, l, &x_bar, &report.classes)?;
    notes.extend(ann.notes.iter().cloned());
    let two_r1 = &ann.r1 + &ann.r1;
    let region = build_region(a, l)?;
    let inner_size = l - &two_r1;
    // U must sit inside T_{L−2r₁}.
    let needed = u.iter().map(|&v| region.gauge(g.position(v))).max().expect("U non-empty").max(QSqrt3::zero());
    let min_l = &needed + &two_r1;
    if *l < min_l {
        return Err(Error::RegionTooSmall { what: "crossing region", l: l.to_f64(), min_l: min_l.to_f64() });
    }
    let region_inner = build_region(a, &inner_size).ok();
    let region_outer = build_region(a, &(l + &two_r1))?;

    let outer_vertices: Vec<usize> =
        (0..g.len()).filter(|&v| region_outer.contains_f64_filtered(g.position(v), g.coords(v))).collect();
    for &v in &outer_vertices {
        if w.phantom(v) > 0 || w.neighbors(v).len() != g.degree(v) {
            return Err(Error::InvalidParameter(format!(
                "window {} does not contain T_(L+2r1) for L = {}: vertex {v} has truncated degree",
                w.descriptor(),
                l.to_f64()
            )));
        }
    }
    let hull = symmetry::HullRegion::of_graph(g);
    if region_outer.corners_f64.iter().any(|&c| hull.depth(c) < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window {} does not contain T_(L+2r1) for L = {}",
            w.descriptor(),
            l.to_f64()
        )));
    }

    let cover = build_cover(a, q)?;
    let ball_r = &cover_radius(q) * l;
    let ball_r2 = ball_r.square();
    let ball_r_f = ball_r.to_f64();
    let ball_vertices = cover
        .iter()
        .map(|c| {
            let center = c.scale(l);
            let (cx, cy) = center.to_f64();
            outer_vertices
                .iter()
                .copied()
                .filter(|&v| {
                    let [x, y] = g.coords(v);
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    if d > ball_r_f + 1e-9 {
                        false
                    } else if d < ball_r_f - 1e-9 {
                        true
                    } else {
                        (g.position(v) - &center).norm2() <= ball_r2
                    }
                })
                .collect()
        })
        .collect();
    let third = l * &QSqrt3::ratio(1, 3);
    let third2 = third.square();
    let inner_ball = (0..g.len()).filter(|&v| g.position(v).norm2() <= third2).collect();

    Ok(CrossingGeometry {
        a,
        l_f64: l.to_f64(),
        l: l.clone(),
        q,
        r: x_bar.norm2().to_f64().sqrt(),
        x_bar,
        r1_f64: ann.r1_f64,
        r1: ann.r1,
        region,
        region_outer,
        region_inner,
        p_cross: p_cross(a, q, u.len()),
        u,
        u0: ann.u0,
        v0: ann.v0,
        w_l: ann.w_l,
        cover,
        outer_vertices,
        ball_vertices,
        inner_ball,
        notes,
    })
}

/// Convenience for tests and callers holding a float size.
pub fn size_from_f64(l: f64) -> Result<QSqrt3> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidParameter(format!("L must be positive, got {l}")));
    }
    QSqrt3::from_f64(l)
}

/// Rotates every point of a set by `R_θ` and checks the set is unchanged.
pub fn points_rotation_invariant(points: &[Point], a: u32) -> Result<bool> {
    let rot = Rotation::of_order(a)?;
    let set: HashSet<&Point> = points.iter().collect();
    Ok(points.iter().all(|p| set.contains(&p.rotate(&rot, &Point::origin()))))
}
