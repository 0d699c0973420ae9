//! Exact checks that straight-line edges meet only at shared endpoints.
//!
//! The default check buckets edges on a uniform grid and runs the exact
//! segment predicates only on pairs sharing a bucket; orientations are
//! first evaluated in floating point and recomputed exactly when the
//! float result is too close to zero to trust. [`check_planar_exhaustive`]
//! tests all pairs exactly and serves as the reference.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact::Point;
use crate::plane_graph::PlaneGraph;

/// Sign of `orient(a, b, c)`, using the float estimate when it is safely
/// away from zero.
fn orient_filtered(g: &PlaneGraph, a: usize, b: usize, c: usize) -> i32 {
    if c == a || c == b || a == b {
        return 0;
    }
    let [ax, ay] = g.coords(a);
    let [bx, by] = g.coords(b);
    let [cx, cy] = g.coords(c);
    let l = (bx - ax) * (cy - ay);
    let r = (by - ay) * (cx - ax);
    let det = l - r;
    // Inputs carry ~1e-16 relative error from the exact-to-float
    // conversion; leave a wide margin.
    let bound = 1e-9 * (l.abs() + r.abs() + 1e-300);
    if det > bound {
        1
    } else if det < -bound {
        -1
    } else {
        Point::orient(g.position(a), g.position(b), g.position(c))
    }
}

/// Whether `c` lies strictly between `a` and `b`, given collinearity.
fn strictly_between(g: &PlaneGraph, a: usize, b: usize, c: usize) -> bool {
    if c == a || c == b {
        return false;
    }
    let (pa, pb, pc) = (g.position(a), g.position(b), g.position(c));
    let ab = pb - pa;
    let t = (pc - pa).dot(&ab);
    t.is_positive() && t < ab.norm2()
}

/// Whether vertex `c` sits in the open segment of edge `(a, b)`.
fn vertex_on_edge(g: &PlaneGraph, (a, b): (usize, usize), c: usize) -> bool {
    c != a && c != b && orient_filtered(g, a, b, c) == 0 && strictly_between(g, a, b, c)
}

/// Whether the open segments of two distinct edges intersect.
fn interiors_meet(g: &PlaneGraph, (a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
    let o1 = orient_filtered(g, a, b, c);
    let o2 = orient_filtered(g, a, b, d);
    if o1 == 0 && o2 == 0 {
        // Collinear: open intervals overlap iff some endpoint of one lies
        // strictly inside the other, or the segments coincide.
        return strictly_between(g, a, b, c)
            || strictly_between(g, a, b, d)
            || strictly_between(g, c, d, a)
            || strictly_between(g, c, d, b)
            || ((a == c && b == d) || (a == d && b == c));
    }
    let o3 = orient_filtered(g, c, d, a);
    let o4 = orient_filtered(g, c, d, b);
    // Touching at an endpoint is not an interior crossing; an endpoint in
    // the other's interior is reported by the vertex test.
    o1 * o2 < 0 && o3 * o4 < 0
}

fn crossing_error(g: &PlaneGraph, e: (usize, usize), f: (usize, usize)) -> Error {
    Error::invariant(
        "planarity",
        format!(
            "edges ({}, {}) and ({}, {}) cross: {:?}-{:?} vs {:?}-{:?}",
            e.0,
            e.1,
            f.0,
            f.1,
            g.position(e.0),
            g.position(e.1),
            g.position(f.0),
            g.position(f.1)
        ),
    )
}

fn vertex_error(g: &PlaneGraph, e: (usize, usize), v: usize) -> Error {
    Error::invariant(
        "planarity",
        format!("vertex {v} at {:?} lies inside edge ({}, {})", g.position(v), e.0, e.1),
    )
}

/// Grid-bucketed planarity check.
pub fn check_planar(g: &PlaneGraph) -> Result<()> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    if edges.is_empty() {
        return Ok(());
    }
    let mut cell = 0f64;
    for &(u, v) in &edges {
        let [ux, uy] = g.coords(u);
        let [vx, vy] = g.coords(v);
        cell = cell.max((ux - vx).abs()).max((uy - vy).abs());
    }
    let cell = cell.max(1e-6);
    let pad = cell * 1e-6;
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);

    let mut buckets: HashMap<(i64, i64), (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (k, &(u, v)) in edges.iter().enumerate() {
        let [ux, uy] = g.coords(u);
        let [vx, vy] = g.coords(v);
        let (x0, y0) = key(ux.min(vx) - pad, uy.min(vy) - pad);
        let (x1, y1) = key(ux.max(vx) + pad, uy.max(vy) + pad);
        for i in x0..=x1 {
            for j in y0..=y1 {
                buckets.entry((i, j)).or_default().0.push(k);
            }
        }
    }
    for v in 0..g.len() {
        let [x, y] = g.coords(v);
        let (x0, y0) = key(x - pad, y - pad);
        let (x1, y1) = key(x + pad, y + pad);
        for i in x0..=x1 {
            for j in y0..=y1 {
                if let Some(b) = buckets.get_mut(&(i, j)) {
                    b.1.push(v);
                }
            }
        }
    }

    let mut keys: Vec<_> = buckets.keys().copied().collect();
    keys.sort_unstable();
    let mut pairs = Vec::new();
    for k in &keys {
        let (es, vs) = &buckets[k];
        for &e in es {
            for &v in vs {
                if vertex_on_edge(g, edges[e], v) {
                    return Err(vertex_error(g, edges[e], v));
                }
            }
        }
        for (i, &e) in es.iter().enumerate() {
            for &f in &es[i + 1..] {
                pairs.push((e.min(f), e.max(f)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    for (e, f) in pairs {
        if interiors_meet(g, edges[e], edges[f]) {
            return Err(crossing_error(g, edges[e], edges[f]));
        }
    }
    Ok(())
}

/// All-pairs exact planarity check, quadratic in the number of edges.
pub fn check_planar_exhaustive(g: &PlaneGraph) -> Result<()> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    for &e in &edges {
        for v in 0..g.len() {
            if v != e.0 && v != e.1 {
                let (a, b, c) = (g.position(e.0), g.position(e.1), g.position(v));
                if Point::orient(a, b, c) == 0 {
                    let ab = b - a;
                    let t = (c - a).dot(&ab);
                    if t.is_positive() && t < ab.norm2() {
                        return Err(vertex_error(g, e, v));
                    }
                }
            }
        }
    }
    for (i, &e) in edges.iter().enumerate() {
        for &f in &edges[i + 1..] {
            if exact_interiors_meet(g, e, f) {
                return Err(crossing_error(g, e, f));
            }
        }
    }
    Ok(())
}

fn exact_interiors_meet(g: &PlaneGraph, (a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
    let (pa, pb, pc, pd) = (g.position(a), g.position(b), g.position(c), g.position(d));
    let o1 = Point::orient(pa, pb, pc);
    let o2 = Point::orient(pa, pb, pd);
    let o3 = Point::orient(pc, pd, pa);
    let o4 = Point::orient(pc, pd, pb);
    if o1 == 0 && o2 == 0 {
        let dir = pb - pa;
        let t = |p: &Point| (p - pa).dot(&dir);
        let (s0, s1) = (t(pa), t(pb));
        let (mut t0, mut t1) = (t(pc), t(pd));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let lo = if s0 > t0 { s0 } else { t0 };
        let hi = if s1 < t1 { s1 } else { t1 };
        return lo < hi;
    }
    o1 * o2 < 0 && o3 * o4 < 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_diagonals_rejected() {
        let pts = vec![Point::int(0, 0), Point::int(1, 1), Point::int(1, 0), Point::int(0, 1)];
        let g = PlaneGraph::new_unchecked_embedding(pts, [(0, 1), (2, 3)], None).unwrap();
        assert!(check_planar(&g).is_err());
        assert!(check_planar_exhaustive(&g).is_err());
    }

    #[test]
    fn vertex_inside_edge_rejected() {
        let pts = vec![Point::int(0, 0), Point::int(2, 0), Point::int(1, 0)];
        let g = PlaneGraph::new_unchecked_embedding(pts, [(0, 1)], None).unwrap();
        assert!(check_planar(&g).is_err());
        assert!(check_planar_exhaustive(&g).is_err());
    }

    #[test]
    fn collinear_overlap_rejected_and_touching_allowed() {
        let pts = vec![Point::int(0, 0), Point::int(2, 0), Point::int(1, 1), Point::int(3, 1)];
        let g = PlaneGraph::new_unchecked_embedding(pts.clone(), [(0, 1), (2, 3)], None).unwrap();
        assert!(check_planar(&g).is_ok());
        let pts = vec![Point::int(0, 0), Point::int(2, 0), Point::int(1, 0), Point::int(3, 0)];
        let g = PlaneGraph::new_unchecked_embedding(pts, [(0, 1), (2, 3)], None).unwrap();
        assert!(check_planar(&g).is_err());
        assert!(check_planar_exhaustive(&g).is_err());
        // A path bending at a shared endpoint.
        let pts = vec![Point::int(0, 0), Point::int(1, 0), Point::int(2, 0), Point::int(1, 1)];
        let g = PlaneGraph::new_unchecked_embedding(pts, [(0, 1), (1, 2), (1, 3)], None).unwrap();
        assert!(check_planar(&g).is_ok());
        assert!(check_planar_exhaustive(&g).is_ok());
    }
}
