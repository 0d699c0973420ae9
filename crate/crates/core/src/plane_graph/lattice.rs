//! Periodic lattices and their finite windows.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3};
use crate::plane_graph::arrangement::{motif_from_arrangement, LineFamily};
use crate::plane_graph::{Boundary, DeclaredSymmetry, PlaneGraph, Window};

/// A bond from site `from` in cell `c` to site `to` in cell `c + shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub shift: [i32; 2],
}

/// One period of a doubly periodic plane graph.
#[derive(Clone, Debug)]
pub struct Motif {
    pub basis: [Point; 2],
    pub sites: Vec<Point>,
    pub bonds: Vec<Bond>,
}

impl Motif {
    pub fn site_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0; self.sites.len()];
        for b in &self.bonds {
            deg[b.from] += 1;
            deg[b.to] += 1;
        }
        deg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Square,
    Triangular,
    Hexagonal,
    DoubleTriangular,
    ModifiedDoubleSquare,
    StripePi,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 6] = [
        LatticeKind::Square,
        LatticeKind::Triangular,
        LatticeKind::Hexagonal,
        LatticeKind::DoubleTriangular,
        LatticeKind::ModifiedDoubleSquare,
        LatticeKind::StripePi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Hexagonal => "hexagonal",
            LatticeKind::DoubleTriangular => "double_triangular",
            LatticeKind::ModifiedDoubleSquare => "modified_double_square",
            LatticeKind::StripePi => "stripe_pi",
        }
    }

    /// Order of the rotation symmetry about the origin.
    pub fn rotation_order(self) -> u32 {
        match self {
            LatticeKind::Square | LatticeKind::ModifiedDoubleSquare => 4,
            LatticeKind::Triangular | LatticeKind::Hexagonal => 6,
            LatticeKind::DoubleTriangular => 3,
            LatticeKind::StripePi => 2,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LatticeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown lattice kind `{s}`")))
    }
}

/// Boundary requested from a builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Free,
    Periodic,
    FixedPlus,
    FixedMinus,
}

impl FromStr for BoundarySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(BoundarySpec::Free),
            "periodic" => Ok(BoundarySpec::Periodic),
            "fixed_plus" | "fixed+1" | "plus" => Ok(BoundarySpec::FixedPlus),
            "fixed_minus" | "fixed-1" | "minus" => Ok(BoundarySpec::FixedMinus),
            _ => Err(Error::InvalidParameter(format!(
                "unknown boundary `{s}` (expected free, periodic, fixed_plus or fixed_minus)"
            ))),
        }
    }
}

fn half_sqrt3() -> QSqrt3 {
    &QSqrt3::sqrt3() * &QSqrt3::ratio(1, 2)
}

fn pt(x: QSqrt3, y: QSqrt3) -> Point {
    Point::new(x, y)
}

/// The periodic motif of a lattice kind; `None` for the stripe graph,
/// which has only one translation.
pub fn motif(kind: LatticeKind) -> Result<Option<Motif>> {
    let b = |from, to, shift| Bond { from, to, shift };
    let m = match kind {
        LatticeKind::Square => Motif {
            basis: [Point::int(1, 0), Point::int(0, 1)],
            sites: vec![Point::origin()],
            bonds: vec![b(0, 0, [1, 0]), b(0, 0, [0, 1])],
        },
        LatticeKind::Triangular => Motif {
            basis: [Point::int(1, 0), pt(QSqrt3::ratio(1, 2), half_sqrt3())],
            sites: vec![Point::origin()],
            bonds: vec![b(0, 0, [1, 0]), b(0, 0, [0, 1]), b(0, 0, [-1, 1])],
        },
        // Unit bonds; the origin is the centre of a hexagonal face.
        LatticeKind::Hexagonal => Motif {
            basis: [pt(QSqrt3::sqrt3(), QSqrt3::zero()), pt(half_sqrt3(), QSqrt3::ratio(3, 2))],
            sites: vec![Point::int(0, 1), Point::int(0, -1)],
            bonds: vec![b(0, 1, [0, 1]), b(0, 1, [-1, 1]), b(0, 1, [-1, 2])],
        },
        LatticeKind::DoubleTriangular => {
            // Normals R_{2πk/3}(0, 1); each keeps the lines at offsets 0 and
            // h (mod 3h) of the triangular lattice, h = √3/2. The π/3
            // direction carries the normal −R_{4π/3}(0, 1), hence offsets
            // 0 and −h.
            let three_h = &QSqrt3::int(3) * &half_sqrt3();
            let families: Vec<LineFamily> = [(0, half_sqrt3()), (4, half_sqrt3()), (2, -half_sqrt3())]
                .into_iter()
                .flat_map(|(a, phase)| {
                    [LineFamily::new(a, three_h.clone(), QSqrt3::zero()), LineFamily::new(a, three_h.clone(), phase)]
                })
                .collect();
            let basis = [Point::int(3, 0), pt(QSqrt3::ratio(3, 2), &QSqrt3::int(3) * &half_sqrt3())];
            motif_from_arrangement(&families, basis)?
        }
        LatticeKind::ModifiedDoubleSquare => {
            let families: Vec<LineFamily> = [0, 3]
                .into_iter()
                .flat_map(|a| {
                    [
                        LineFamily::new(a, QSqrt3::one(), QSqrt3::ratio(1, 2)),
                        LineFamily::new(a, QSqrt3::int(2), QSqrt3::zero()),
                    ]
                })
                .collect();
            motif_from_arrangement(&families, [Point::int(2, 0), Point::int(0, 2)])?
        }
        LatticeKind::StripePi => return Ok(None),
    };
    Ok(Some(m))
}

fn boundary_of(spec: BoundarySpec, tiles: Option<[Point; 2]>) -> Boundary {
    match spec {
        BoundarySpec::Free => Boundary::Free,
        BoundarySpec::FixedPlus => Boundary::Fixed(1),
        BoundarySpec::FixedMinus => Boundary::Fixed(-1),
        BoundarySpec::Periodic => Boundary::Periodic { tiles: tiles.expect("periodic window needs tiles") },
    }
}

/// Builds an `extent × extent`-cell window of a lattice around the origin.
pub fn build_lattice(kind: LatticeKind, extent: usize, boundary: BoundarySpec) -> Result<Window> {
    if extent < 3 {
        return Err(Error::InvalidParameter(format!("extent must be at least 3, got {extent}")));
    }
    match motif(kind)? {
        Some(m) => window_from_motif(&m, extent, boundary, kind.rotation_order(), kind.name()),
        None => build_stripe(extent, boundary),
    }
}

/// Cells `[lo, lo + n)` with `lo = -⌊n/2⌋`, so the origin cell is central.
pub fn window_from_motif(
    m: &Motif,
    extent: usize,
    boundary: BoundarySpec,
    rotation_order: u32,
    name: &str,
) -> Result<Window> {
    let n = extent as i64;
    let lo = -(n / 2);
    let s_count = m.sites.len();
    let id = |ci: i64, cj: i64, s: usize| (((cj - lo) * n + (ci - lo)) as usize) * s_count + s;
    let periodic = boundary == BoundarySpec::Periodic;

    let mut positions = Vec::with_capacity((n * n) as usize * s_count);
    for cj in lo..lo + n {
        for ci in lo..lo + n {
            let origin = &m.basis[0].scale(&QSqrt3::int(ci)) + &m.basis[1].scale(&QSqrt3::int(cj));
            for site in &m.sites {
                positions.push(&origin + site);
            }
        }
    }
    let in_range = |c: i64| c >= lo && c < lo + n;
    let wrap = |c: i64| (c - lo).rem_euclid(n) + lo;
    let mut edges = Vec::new();
    let mut wrapped = Vec::new();
    for cj in lo..lo + n {
        for ci in lo..lo + n {
            for b in &m.bonds {
                let (ti, tj) = (ci + b.shift[0] as i64, cj + b.shift[1] as i64);
                let u = id(ci, cj, b.from);
                if in_range(ti) && in_range(tj) {
                    edges.push((u, id(ti, tj, b.to)));
                } else if periodic {
                    wrapped.push((u, id(wrap(ti), wrap(tj), b.to)));
                }
            }
        }
    }
    if periodic {
        let mut seen: HashSet<(usize, usize)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        for &(u, v) in &wrapped {
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidParameter(format!(
                    "periodic {name} window of extent {extent} folds bonds onto each other; use a larger extent"
                )));
            }
        }
    }

    let sym = DeclaredSymmetry {
        translations: m.basis.to_vec(),
        rotation_order,
        center: Point::origin(),
    };
    let graph = PlaneGraph::new(positions, edges, Some(sym))?;
    let site_deg = m.site_degrees();
    let wrapped_deg = {
        let mut d = vec![0u32; graph.len()];
        for &(u, v) in &wrapped {
            d[u] += 1;
            d[v] += 1;
        }
        d
    };
    let phantom: Vec<u32> = (0..graph.len())
        .map(|v| site_deg[v % s_count] - graph.degree(v) as u32 - wrapped_deg[v])
        .collect();
    let tiles = [m.basis[0].scale(&QSqrt3::int(n)), m.basis[1].scale(&QSqrt3::int(n))];
    let b = boundary_of(boundary, Some(tiles));
    Window::assemble(graph, b, phantom, wrapped, format!("{name}/{extent}/{}", boundary_name(boundary)))
}

fn boundary_name(b: BoundarySpec) -> &'static str {
    match b {
        BoundarySpec::Free => "free",
        BoundarySpec::Periodic => "periodic",
        BoundarySpec::FixedPlus => "fixed_plus",
        BoundarySpec::FixedMinus => "fixed_minus",
    }
}

/// `ℤ²` with all vertical edges and horizontal edges only on the x-axis.
fn build_stripe(extent: usize, boundary: BoundarySpec) -> Result<Window> {
    if boundary == BoundarySpec::Periodic {
        return Err(Error::InvalidParameter(
            "stripe_pi has no vertical period, so no extent admits a periodic window".into(),
        ));
    }
    let n = extent as i64;
    let lo = -(n / 2);
    let id = |i: i64, j: i64| ((j - lo) * n + (i - lo)) as usize;
    let mut positions = Vec::new();
    let mut edges = Vec::new();
    let mut phantom = Vec::new();
    for j in lo..lo + n {
        for i in lo..lo + n {
            positions.push(Point::int(i, j));
            if j + 1 < lo + n {
                edges.push((id(i, j), id(i, j + 1)));
            }
            if j == 0 && i + 1 < lo + n {
                edges.push((id(i, j), id(i + 1, j)));
            }
        }
    }
    let sym = DeclaredSymmetry { translations: vec![Point::int(1, 0)], rotation_order: 2, center: Point::origin() };
    let graph = PlaneGraph::new(positions, edges, Some(sym))?;
    for v in 0..graph.len() {
        let full = if graph.position(v).y.is_zero() { 4 } else { 2 };
        phantom.push(full - graph.degree(v) as u32);
    }
    Window::assemble(
        graph,
        boundary_of(boundary, None),
        phantom,
        Vec::new(),
        format!("stripe_pi/{extent}/{}", boundary_name(boundary)),
    )
}
