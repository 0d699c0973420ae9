//! Zero-temperature stochastic Ising (majority) dynamics on planar
//! quasi-transitive graphs.
//!
//! - [`plane_graph`]: exact plane graphs, lattice and line-arrangement
//!   builders, finite windows, graph files.
//! - [`symmetry`]: translation and rotation checks, orbit classes.
//! - [`shrink`]: shrink and planar-shrink verdicts, frozen-set search,
//!   line-arrangement certificates.
//! - [`harris`]: the event-driven simulation and its couplings.
//! - [`geometry`]: crossing regions, ball covers, annuli, hull tests.
//! - [`observables`]: clusters, fixation tallies, crossing and full-ball
//!   events.
//! - [`experiment`]: configuration-driven batch runs and rendering.

pub mod error;
pub mod exact;
pub mod experiment;
pub mod geometry;
pub mod harris;
pub mod observables;
pub mod plane_graph;
pub mod shrink;
pub mod symmetry;
pub mod union_find;

pub use error::{Error, Result};
pub use exact::{Point, QSqrt3, Rotation};
pub use harris::{HarrisSchedule, SpinConfiguration};
pub use plane_graph::{build_class_h, build_lattice, BoundarySpec, LatticeKind, LineFamily, PlaneGraph, Window};
