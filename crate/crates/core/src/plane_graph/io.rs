//! JSON graph files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "vertices": [{"id": 0, "x": [0, 1, 0, 1], "y": [1, 2, 0, 1], "class": null}],
//!   "edges": [[0, 1]],
//!   "symmetry": {"translations": [[[1,1,0,1], [0,1,0,1]]], "rotation_order": 4, "center": [[0,1,0,1], [0,1,0,1]]}
//! }
//! ```
//!
//! A coordinate `[p, q, r, s]` is the exact number `p/q + (r/s)·√3`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{Point, QSqrt3};
use crate::plane_graph::{DeclaredSymmetry, PlaneGraph};

pub const FORMAT_VERSION: u32 = 1;

pub type Coord = [i64; 4];

#[derive(Debug, Serialize, Deserialize)]
struct VertexRecord {
    id: usize,
    x: Coord,
    y: Coord,
    class: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SymmetryRecord {
    translations: Vec<[Coord; 2]>,
    rotation_order: u32,
    center: [Coord; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    format_version: u32,
    vertices: Vec<VertexRecord>,
    edges: Vec<[usize; 2]>,
    symmetry: Option<SymmetryRecord>,
}

pub fn coord_of(q: &QSqrt3) -> Result<Coord> {
    q.to_parts()
        .ok_or_else(|| Error::InvalidParameter(format!("coordinate {q} does not fit the file format")))
}

pub fn point_record(p: &Point) -> Result<[Coord; 2]> {
    Ok([coord_of(&p.x)?, coord_of(&p.y)?])
}

pub fn parse_coord(c: &Coord) -> Result<QSqrt3> {
    QSqrt3::from_parts(c[0], c[1], c[2], c[3])
}

pub fn parse_point(p: &[Coord; 2]) -> Result<Point> {
    Ok(Point::new(parse_coord(&p[0])?, parse_coord(&p[1])?))
}

/// Serializes a graph to the JSON text of the file format.
pub fn graph_to_json(g: &PlaneGraph) -> Result<String> {
    let vertices = g
        .vertices()
        .iter()
        .map(|v| {
            Ok(VertexRecord { id: v.id, x: coord_of(&v.position.x)?, y: coord_of(&v.position.y)?, class: v.class_label })
        })
        .collect::<Result<Vec<_>>>()?;
    let symmetry = g
        .declared_symmetry()
        .map(|s| {
            Ok::<_, Error>(SymmetryRecord {
                translations: s.translations.iter().map(point_record).collect::<Result<_>>()?,
                rotation_order: s.rotation_order,
                center: point_record(&s.center)?,
            })
        })
        .transpose()?;
    let file = GraphFile {
        format_version: FORMAT_VERSION,
        vertices,
        edges: g.edges().map(|(u, v)| [u, v]).collect(),
        symmetry,
    };
    let mut s = serde_json::to_string(&file)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates the JSON text of a graph file.
pub fn graph_from_json(text: &str) -> Result<PlaneGraph> {
    let file: GraphFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::invariant(
            "format version",
            format!("expected {FORMAT_VERSION}, found {}", file.format_version),
        ));
    }
    let n = file.vertices.len();
    let mut slots: Vec<Option<&VertexRecord>> = vec![None; n];
    for v in &file.vertices {
        if v.id >= n {
            return Err(Error::invariant("dense ids", format!("id {} with {n} vertices", v.id)));
        }
        if slots[v.id].replace(v).is_some() {
            return Err(Error::invariant("dense ids", format!("id {} appears twice", v.id)));
        }
    }
    let mut positions = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for v in slots.into_iter().map(|s| s.expect("ids are a permutation")) {
        positions.push(Point::new(parse_coord(&v.x)?, parse_coord(&v.y)?));
        labels.push(v.class);
    }
    for &[i, j] in &file.edges {
        if i >= j {
            return Err(Error::invariant("edge order", format!("edge [{i}, {j}] must list the smaller id first")));
        }
    }
    let symmetry = file
        .symmetry
        .as_ref()
        .map(|s| {
            Ok::<_, Error>(DeclaredSymmetry {
                translations: s.translations.iter().map(parse_point).collect::<Result<_>>()?,
                rotation_order: s.rotation_order,
                center: parse_point(&s.center)?,
            })
        })
        .transpose()?;
    let g = PlaneGraph::new(positions, file.edges.iter().map(|e| (e[0], e[1])), symmetry)?;
    g.with_class_labels(&labels)
}

pub fn write_graph(g: &PlaneGraph, path: &Path) -> Result<()> {
    let text = graph_to_json(g)?;
    write_atomic(path, text.as_bytes())
}

pub fn read_graph(path: &Path) -> Result<PlaneGraph> {
    graph_from_json(&fs::read_to_string(path)?)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane_graph::{build_lattice, BoundarySpec, LatticeKind};

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in [LatticeKind::Square, LatticeKind::Hexagonal, LatticeKind::DoubleTriangular] {
            let g = build_lattice(kind, 3, BoundarySpec::Free).unwrap().graph().clone();
            let text = graph_to_json(&g).unwrap();
            let back = graph_from_json(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(graph_to_json(&back).unwrap(), text);
        }
    }

    #[test]
    fn invalid_files_name_the_invariant() {
        let base = r#"{"format_version":1,"vertices":[
            {"id":0,"x":[0,1,0,1],"y":[0,1,0,1],"class":null},
            {"id":1,"x":[1,1,0,1],"y":[1,1,0,1],"class":null},
            {"id":2,"x":[1,1,0,1],"y":[0,1,0,1],"class":null},
            {"id":3,"x":[0,1,0,1],"y":[1,1,0,1],"class":null}],
            "edges":EDGES,"symmetry":null}"#;
        let with = |e: &str| graph_from_json(&base.replace("EDGES", e));
        assert!(with("[[0,1]]").is_ok());
        assert!(matches!(with("[[0,1],[0,1]]"), Err(Error::Invariant { invariant: "no parallel edges", .. })));
        assert!(matches!(with("[[0,1],[2,3]]"), Err(Error::Invariant { invariant: "planarity", .. })));
        assert!(matches!(with("[[1,0]]"), Err(Error::Invariant { invariant: "edge order", .. })));
        assert!(matches!(graph_from_json("{"), Err(Error::Json(_))));
    }
}
