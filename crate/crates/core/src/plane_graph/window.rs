use crate::error::{Error, Result};
use crate::exact::Point;
use crate::plane_graph::lattice::BoundarySpec;
use crate::plane_graph::PlaneGraph;

/// How the dynamics treats neighbours missing from a finite window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Missing neighbours are simply absent.
    Free,
    /// Opposite sides are glued along the two tile vectors.
    Periodic { tiles: [Point; 2] },
    /// Every missing neighbour is a phantom with this spin.
    Fixed(i8),
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Free => "free",
            Boundary::Periodic { .. } => "periodic",
            Boundary::Fixed(1) => "fixed_plus",
            Boundary::Fixed(_) => "fixed_minus",
        }
    }
}

/// A finite piece of an infinite plane graph, plus the boundary rule the
/// dynamics uses on it.
///
/// `graph` is always the planar piece. Periodic windows keep their wrapped
/// bonds only in the dynamics adjacency returned by [`Window::neighbors`].
#[derive(Clone, Debug)]
pub struct Window {
    graph: PlaneGraph,
    boundary: Boundary,
    interior_margin: f64,
    offsets: Vec<u32>,
    nbrs: Vec<u32>,
    phantom: Vec<u32>,
    rim_distance: Vec<u32>,
    descriptor: String,
}

impl Window {
    pub(crate) fn assemble(
        graph: PlaneGraph,
        boundary: Boundary,
        phantom: Vec<u32>,
        wrapped: Vec<(usize, usize)>,
        descriptor: String,
    ) -> Result<Self> {
        let n = graph.len();
        let mut lists: Vec<Vec<u32>> = (0..n).map(|v| graph.neighbors(v).iter().map(|&u| u as u32).collect()).collect();
        for &(u, v) in &wrapped {
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbrs = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            nbrs.extend(l);
            offsets.push(nbrs.len() as u32);
        }
        let rim_distance = if matches!(boundary, Boundary::Periodic { .. }) {
            vec![u32::MAX; n]
        } else {
            graph.bfs_distances((0..n).filter(|&v| phantom[v] > 0))
        };
        Ok(Self { graph, boundary, interior_margin: 0.0, offsets, nbrs, phantom, rim_distance, descriptor })
    }

    /// Wraps a graph read from disk. The full degree of every vertex is
    /// taken to be the graph's maximum degree.
    pub fn from_graph(graph: PlaneGraph, boundary: BoundarySpec) -> Result<Self> {
        let b = match boundary {
            BoundarySpec::Free => Boundary::Free,
            BoundarySpec::FixedPlus => Boundary::Fixed(1),
            BoundarySpec::FixedMinus => Boundary::Fixed(-1),
            BoundarySpec::Periodic => {
                return Err(Error::InvalidParameter(
                    "periodic boundaries need builder-declared tile vectors; a graph file carries none".into(),
                ))
            }
        };
        let d = graph.max_degree() as u32;
        let phantom = (0..graph.len()).map(|v| d - graph.degree(v) as u32).collect();
        Self::assemble(graph, b, phantom, Vec::new(), "file".into())
    }

    /// Same window with another non-periodic boundary rule.
    pub fn with_boundary(mut self, boundary: BoundarySpec) -> Result<Self> {
        if matches!(self.boundary, Boundary::Periodic { .. }) || boundary == BoundarySpec::Periodic {
            return Err(Error::InvalidParameter("periodicity is fixed when the window is built".into()));
        }
        self.boundary = match boundary {
            BoundarySpec::Free => Boundary::Free,
            BoundarySpec::FixedPlus => Boundary::Fixed(1),
            _ => Boundary::Fixed(-1),
        };
        Ok(self)
    }

    pub fn graph(&self) -> &PlaneGraph {
        &self.graph
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.boundary, Boundary::Periodic { .. })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Neighbours under the boundary rule (wrapped bonds included).
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.nbrs[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Number of neighbours the infinite graph has but the window lacks.
    #[inline]
    pub fn phantom(&self, v: usize) -> u32 {
        self.phantom[v]
    }

    /// Summed spin of the phantom neighbours of `v`.
    #[inline]
    pub fn boundary_field(&self, v: usize) -> i32 {
        match self.boundary {
            Boundary::Fixed(s) => s as i32 * self.phantom[v] as i32,
            _ => 0,
        }
    }

    /// Hop distance to the nearest truncated vertex (`u32::MAX` if none).
    pub fn rim_distance(&self, v: usize) -> u32 {
        self.rim_distance[v]
    }

    pub fn touches_rim(&self, v: usize) -> bool {
        self.rim_distance[v] == 0
    }

    pub fn interior_margin(&self) -> f64 {
        self.interior_margin
    }

    pub fn set_interior_margin(&mut self, margin: f64) -> Result<()> {
        if !(margin >= 0.0) {
            return Err(Error::InvalidParameter(format!("interior margin must be ≥ 0, got {margin}")));
        }
        self.interior_margin = margin;
        Ok(())
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.rim_distance[v] as f64 >= self.interior_margin
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_interior(v)).collect()
    }

    /// Vertex closest to the origin, ties broken by id.
    pub fn origin_vertex(&self) -> usize {
        (0..self.len())
            .min_by(|&a, &b| {
                self.graph
                    .position(a)
                    .norm2()
                    .cmp(&self.graph.position(b).norm2())
                    .then(a.cmp(&b))
            })
            .expect("window is non-empty")
    }
}
