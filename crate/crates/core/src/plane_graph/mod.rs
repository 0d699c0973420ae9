//! Plane graphs with exact coordinates, lattice and line-arrangement
//! builders, finite windows, and the JSON graph format.

pub mod arrangement;
mod graph;
pub mod io;
pub mod lattice;
pub mod planarity;
mod window;

pub use arrangement::{build_class_h, LineFamily};
pub use graph::{DeclaredSymmetry, PlaneGraph, Vertex};
pub use io::{read_graph, write_graph};
pub use lattice::{build_lattice, BoundarySpec, LatticeKind};
pub use window::{Boundary, Window};
