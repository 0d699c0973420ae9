use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::exact::Point;
use crate::plane_graph::planarity;

/// A vertex of an embedded graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: usize,
    pub position: Point,
    /// Quasi-transitivity class, filled in by the symmetry classifier.
    pub class_label: Option<u32>,
}

/// The symmetries a builder claims for its (infinite) graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclaredSymmetry {
    pub translations: Vec<Point>,
    pub rotation_order: u32,
    pub center: Point,
}

/// A finite graph embedded in the plane with straight edges and exact
/// coordinates. Immutable once built.
#[derive(Clone, Debug)]
pub struct PlaneGraph {
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<usize>>,
    declared_symmetry: Option<DeclaredSymmetry>,
    max_degree: usize,
    coords: Vec<[f64; 2]>,
    index: HashMap<Point, usize>,
}

impl PartialEq for PlaneGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.adjacency == other.adjacency
            && self.declared_symmetry == other.declared_symmetry
    }
}

impl Eq for PlaneGraph {}

impl PlaneGraph {
    /// Builds and validates a plane graph. Vertex `i` gets id `i`.
    ///
    /// Rejects duplicate positions, self-loops, parallel edges, unknown
    /// endpoints, and embeddings where an edge passes through a vertex or
    /// two edges share interior points.
    pub fn new(
        positions: Vec<Point>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        declared_symmetry: Option<DeclaredSymmetry>,
    ) -> Result<Self> {
        let g = Self::new_unchecked_embedding(positions, edges, declared_symmetry)?;
        planarity::check_planar(&g)?;
        Ok(g)
    }

    /// Like [`PlaneGraph::new`] but skips the segment-intersection pass.
    /// Combinatorial invariants are still enforced.
    pub fn new_unchecked_embedding(
        positions: Vec<Point>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        declared_symmetry: Option<DeclaredSymmetry>,
    ) -> Result<Self> {
        let n = positions.len();
        let mut index = HashMap::with_capacity(n);
        for (i, p) in positions.iter().enumerate() {
            if let Some(j) = index.insert(p.clone(), i) {
                return Err(Error::invariant(
                    "distinct positions",
                    format!("vertices {j} and {i} both sit at {p:?}"),
                ));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invariant("edge endpoints exist", format!("edge ({u}, {v}) with {n} vertices")));
            }
            if u == v {
                return Err(Error::invariant("no self-loops", format!("loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::invariant("no parallel edges", format!("edge ({u}, {}) listed twice", w[0])));
            }
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        let coords = positions.iter().map(|p| { let (x, y) = p.to_f64(); [x, y] }).collect();
        let vertices = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| Vertex { id, position, class_label: None })
            .collect();
        Ok(Self { vertices, adjacency, declared_symmetry, max_degree, coords, index })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn position(&self, v: usize) -> &Point {
        &self.vertices[v].position
    }

    /// Floating-point copy of the position, for plotting and coarse filters.
    pub fn coords(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn declared_symmetry(&self) -> Option<&DeclaredSymmetry> {
        self.declared_symmetry.as_ref()
    }

    pub fn id_at(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn class_label(&self, v: usize) -> Option<u32> {
        self.vertices[v].class_label
    }

    /// Returns a copy with the given class labels attached.
    pub fn with_class_labels(mut self, labels: &[Option<u32>]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.len()
            )));
        }
        for (v, l) in self.vertices.iter_mut().zip(labels) {
            v.class_label = *l;
        }
        Ok(self)
    }

    fn check_id(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// `|N(v) ∩ S|`.
    pub fn degree_in(&self, v: usize, s: &BTreeSet<usize>) -> Result<usize> {
        self.check_id(v)?;
        Ok(self.adjacency[v].iter().filter(|u| s.contains(u)).count())
    }

    /// Vertices outside `S` with at least one neighbour in `S`.
    pub fn external_boundary(&self, s: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for &v in s {
            self.check_id(v)?;
            out.extend(self.adjacency[v].iter().filter(|u| !s.contains(u)));
        }
        Ok(out)
    }

    /// Connected components of the subgraph induced by `mask`, as a label
    /// per vertex (`usize::MAX` outside the mask).
    pub fn induced_components(&self, mask: &[bool]) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.len() {
            if !mask[s] || label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &u in &self.adjacency[v] {
                    if mask[u] && label[u] == usize::MAX {
                        label[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// True when the vertex set is non-empty and induces a connected subgraph.
    pub fn is_connected_set(&self, s: &BTreeSet<usize>) -> bool {
        let mut mask = vec![false; self.len()];
        for &v in s {
            mask[v] = true;
        }
        let labels = self.induced_components(&mask);
        let mut seen = s.iter().map(|&v| labels[v]);
        match seen.next() {
            None => false,
            Some(first) => seen.all(|l| l == first),
        }
    }

    /// Shortest path (in hops) from `from` to `to` using only vertices
    /// accepted by `allowed`; endpoints must be allowed.
    pub fn shortest_path(&self, from: usize, to: usize, allowed: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        if !allowed(from) || !allowed(to) {
            return None;
        }
        let mut prev = vec![usize::MAX; self.len()];
        let mut queue = std::collections::VecDeque::from([from]);
        prev[from] = from;
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &u in &self.adjacency[v] {
                if prev[u] == usize::MAX && allowed(u) {
                    prev[u] = v;
                    queue.push_back(u);
                }
            }
        }
        None
    }

    /// Hop distances from a set of sources (`u32::MAX` when unreachable).
    pub fn bfs_distances(&self, sources: impl IntoIterator<Item = usize>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        for s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if dist[u] == u32::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}
