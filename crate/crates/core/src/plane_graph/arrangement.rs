//! Graphs cut out by arrangements of full lines.
//!
//! Vertices are the pairwise intersection points inside a closed box and
//! edges join consecutive intersections along each line, so every vertex
//! away from the box has even degree and every edge's supporting line is
//! covered by edges.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3, Rotation};
use crate::plane_graph::lattice::{Bond, Motif};
use crate::plane_graph::{Boundary, PlaneGraph, Window};

/// The lines `n·p = phase + k·spacing`, `k ∈ ℤ`, where `n` is the unit
/// normal of direction `angle_steps · π/6`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineFamily {
    pub angle_steps: u32,
    pub spacing: QSqrt3,
    pub phase: QSqrt3,
}

impl LineFamily {
    pub fn new(angle_steps: u32, spacing: QSqrt3, phase: QSqrt3) -> Self {
        Self { angle_steps, spacing, phase }
    }

    /// Unit direction of the lines.
    pub fn direction(&self) -> Point {
        Point::new(QSqrt3::one(), QSqrt3::zero()).rotate(&Rotation::by_twelfths(self.angle_steps % 6), &Point::origin())
    }

    /// Unit normal, the direction turned by π/2.
    pub fn normal(&self) -> Point {
        let d = self.direction();
        Point::new(-&d.y, d.x)
    }
}

struct Line {
    normal: Point,
    value: QSqrt3,
    direction: Point,
}

pub(crate) struct Arrangement {
    pub positions: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    pub lines_through: Vec<u32>,
}

fn ceil_q(x: &QSqrt3) -> i64 {
    -num::ToPrimitive::to_i64(&(-x).floor()).expect("line index fits in i64")
}

fn floor_q(x: &QSqrt3) -> i64 {
    num::ToPrimitive::to_i64(&x.floor()).expect("line index fits in i64")
}

/// Arrangement restricted to the closed box `[-half, half]²`.
pub(crate) fn arrangement_in_box(families: &[LineFamily], half: &QSqrt3) -> Result<Arrangement> {
    if families.is_empty() {
        return Err(Error::InvalidParameter("at least two line families are required".into()));
    }
    let mut directions: Vec<u32> = families.iter().map(|f| f.angle_steps % 6).collect();
    directions.sort_unstable();
    directions.dedup();
    if directions.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least two non-parallel line families are required".into(),
        ));
    }
    for f in families {
        if !f.spacing.is_positive() {
            return Err(Error::InvalidParameter(format!("line spacing must be positive, got {}", f.spacing)));
        }
    }

    let corners = [
        Point::new(-half, -half),
        Point::new(half.clone(), -half),
        Point::new(-half, half.clone()),
        Point::new(half.clone(), half.clone()),
    ];
    let mut lines: Vec<(u32, Line)> = Vec::new();
    let mut seen: Vec<(u32, QSqrt3)> = Vec::new();
    for f in families {
        let normal = f.normal();
        let direction = f.direction();
        let vals: Vec<QSqrt3> = corners.iter().map(|c| normal.dot(c)).collect();
        let lo = vals.iter().min().unwrap();
        let hi = vals.iter().max().unwrap();
        let k_lo = ceil_q(&((lo - &f.phase) / &f.spacing));
        let k_hi = floor_q(&((hi - &f.phase) / &f.spacing));
        for k in k_lo..=k_hi {
            let value = &f.phase + &(&QSqrt3::int(k) * &f.spacing);
            let key = (f.angle_steps % 6, value.clone());
            // Families may overlap; a line is a line.
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            lines.push((f.angle_steps % 6, Line { normal: normal.clone(), value, direction: direction.clone() }));
        }
    }

    let inside = |p: &Point| p.x.abs() <= *half && p.y.abs() <= *half;
    let mut index: HashMap<Point, usize> = HashMap::new();
    let mut raw: Vec<Point> = Vec::new();
    let mut on_line: Vec<Vec<usize>> = vec![Vec::new(); lines.len()];
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if lines[i].0 == lines[j].0 {
                continue;
            }
            let (a, b) = (&lines[i].1, &lines[j].1);
            let det = a.normal.cross(&b.normal);
            let x = (&(&a.value * &b.normal.y) - &(&b.value * &a.normal.y)) / &det;
            let y = (&(&a.normal.x * &b.value) - &(&b.normal.x * &a.value)) / &det;
            let p = Point::new(x, y);
            if !inside(&p) {
                continue;
            }
            let id = *index.entry(p.clone()).or_insert_with(|| {
                raw.push(p);
                raw.len() - 1
            });
            on_line[i].push(id);
            on_line[j].push(id);
        }
    }

    // Canonical ids: sort by (y, x).
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].y.cmp(&raw[b].y).then_with(|| raw[a].x.cmp(&raw[b].x)));
    let mut rank = vec![0; raw.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let positions: Vec<Point> = order.iter().map(|&i| raw[i].clone()).collect();

    let mut lines_through = vec![0u32; positions.len()];
    let mut edges = Vec::new();
    for (l, ids) in on_line.iter_mut().enumerate() {
        ids.sort_unstable();
        ids.dedup();
        let dir = &lines[l].1.direction;
        let mut keyed: Vec<(QSqrt3, usize)> = ids.iter().map(|&i| (dir.dot(&raw[i]), rank[i])).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, v) in &keyed {
            lines_through[*v] += 1;
        }
        for w in keyed.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    Ok(Arrangement { positions, edges, lines_through })
}

/// Builds the plane graph of a line arrangement inside the closed box
/// `[-extent/2, extent/2]²`, with a free boundary.
///
/// Vertices lose degree only where their lines leave the box; the window's
/// phantom count records that deficit.
pub fn build_class_h(families: &[LineFamily], extent: usize) -> Result<Window> {
    if extent == 0 {
        return Err(Error::InvalidParameter("extent must be positive".into()));
    }
    let half = QSqrt3::ratio(extent as i64, 2);
    let arr = arrangement_in_box(families, &half)?;
    let graph = PlaneGraph::new(arr.positions, arr.edges, None)?;
    let phantom: Vec<u32> = (0..graph.len())
        .map(|v| 2 * arr.lines_through[v] - graph.degree(v) as u32)
        .collect();
    Window::assemble(graph, Boundary::Free, phantom, Vec::new(), format!("class_h/{extent}"))
}

/// Extracts a periodic motif from an arrangement with the given period
/// lattice.
pub(crate) fn motif_from_arrangement(families: &[LineFamily], basis: [Point; 2]) -> Result<Motif> {
    let reach = basis[0].norm2().to_f64().sqrt() + basis[1].norm2().to_f64().sqrt();
    let half = QSqrt3::int((3.0 * reach).ceil() as i64 + 2);
    let arr = arrangement_in_box(families, &half)?;
    let det = basis[0].cross(&basis[1]);
    let cell_of = |p: &Point| -> ([i32; 2], Point) {
        let a = (p.cross(&basis[1]) / &det).floor();
        let b = (basis[0].cross(p) / &det).floor();
        let (a, b) = (
            num::ToPrimitive::to_i32(&a).expect("cell index fits"),
            num::ToPrimitive::to_i32(&b).expect("cell index fits"),
        );
        let origin = &basis[0].scale(&QSqrt3::int(a as i64)) + &basis[1].scale(&QSqrt3::int(b as i64));
        ([a, b], p - &origin)
    };

    let mut sites = Vec::new();
    let mut site_vertex = Vec::new();
    let mut site_index: HashMap<Point, usize> = HashMap::new();
    let mut adjacency = vec![Vec::new(); arr.positions.len()];
    for &(u, v) in &arr.edges {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for (v, p) in arr.positions.iter().enumerate() {
        let (cell, offset) = cell_of(p);
        if cell == [0, 0] {
            site_index.insert(offset.clone(), sites.len());
            sites.push(offset);
            site_vertex.push(v);
        }
    }
    if sites.is_empty() {
        return Err(Error::InvalidParameter("arrangement has no vertex in the unit cell".into()));
    }
    let mut bonds = Vec::new();
    for (s, &v) in site_vertex.iter().enumerate() {
        if adjacency[v].len() as u32 != 2 * arr.lines_through[v] {
            return Err(Error::Assertion(format!("motif site {s} is truncated; enlarge the sampling box")));
        }
        for &u in &adjacency[v] {
            let (shift, offset) = cell_of(&arr.positions[u]);
            let t = *site_index.get(&offset).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "vertex at {:?} has no periodic image in the unit cell; the basis is not a period",
                    arr.positions[u]
                ))
            })?;
            if shift > [0, 0] || (shift == [0, 0] && t > s) {
                bonds.push(Bond { from: s, to: t, shift });
            }
        }
    }
    Ok(Motif { basis, sites, bonds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(angle: u32) -> LineFamily {
        LineFamily::new(angle, QSqrt3::one(), QSqrt3::zero())
    }

    #[test]
    fn rejects_parallel_only() {
        assert!(build_class_h(&[unit(0), unit(6)], 4).is_err());
        assert!(build_class_h(&[unit(0)], 4).is_err());
        let bad = LineFamily::new(3, QSqrt3::zero(), QSqrt3::zero());
        assert!(build_class_h(&[unit(0), bad], 4).is_err());
    }

    #[test]
    fn orthogonal_families_make_square_grid() {
        let w = build_class_h(&[unit(0), unit(3)], 3).unwrap();
        let g = w.graph();
        assert_eq!(g.len(), 9);
        assert_eq!(g.edge_count(), 12);
        let c = g.id_at(&Point::int(0, 0)).unwrap();
        assert_eq!(g.degree(c), 4);
        assert_eq!(w.phantom(c), 0);
        let corner = g.id_at(&Point::int(1, 1)).unwrap();
        assert_eq!((g.degree(corner), w.phantom(corner)), (2, 2));
    }
}
