//! Locally finite weighted magnetic graphs.
//!
//! A graph carries a positive vertex measure `mu`, symmetric positive edge
//! weights `b`, and an antisymmetric phase `theta` per oriented edge. A graph
//! is either *complete* (it is the whole universe, e.g. a loaded finite graph)
//! or the ball `B(x0, N)` of a larger family, in which case vertices on the
//! outermost layer may miss neighbors and operators must not be evaluated
//! there (the margin rule).

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::GraphError;

/// One oriented half-edge out of a vertex. The phase factor `e^{i theta}` is
/// cached; the reverse half-edge stores the exact complex conjugate.
#[derive(Debug, Clone, Copy)]
pub struct HalfEdge {
    pub to: usize,
    pub b: f64,
    pub theta: f64,
    pub phase: Complex64,
}

/// An oriented edge as given to a constructor (u -> v with theta(u, v)).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub b: f64,
    pub theta: f64,
}

/// Finite realization of a weighted magnetic graph `(V, b, mu)` with phases.
#[derive(Debug, Clone)]
pub struct MagneticGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    adj: Vec<Vec<HalfEdge>>,
    /// Edges in construction order and orientation, for faithful round-trips.
    edge_list: Vec<EdgeSpec>,
    root: usize,
    mu_floor: f64,
    /// Combinatorial distance from the root, via BFS at construction.
    radius: Vec<u32>,
    /// `Some(N)` when this graph is `B(x0, N)` of a larger family.
    horizon: Option<u32>,
}

/// A ball `B(x0, n)`: the vertices within distance n and the edges with both
/// endpoints inside.
#[derive(Debug, Clone)]
pub struct Ball {
    pub n: u32,
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// theta = -pi and theta = pi give the same phase factor; keep pi.
fn canonicalize_theta(theta: f64) -> f64 {
    if theta == -PI {
        PI
    } else {
        theta
    }
}

impl MagneticGraph {
    /// Build and validate a graph from vertex and edge tables.
    ///
    /// Both orientations of an edge may be supplied; they must agree on `b`
    /// and carry opposite phases. All type invariants are enforced here.
    pub fn new(
        root: &str,
        mu_floor: f64,
        vertices: Vec<(String, f64)>,
        edges: Vec<EdgeSpec>,
    ) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        if !mu_floor.is_finite() {
            return Err(GraphError::NonFinite("mu_floor"));
        }
        if mu_floor <= 0.0 {
            return Err(GraphError::NonPositiveMuFloor(mu_floor));
        }

        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        let mut mu = Vec::with_capacity(vertices.len());
        for (id, m) in vertices {
            if !m.is_finite() {
                return Err(GraphError::NonFinite("mu"));
            }
            if m <= 0.0 {
                return Err(GraphError::NonPositiveMeasure { id, mu: m });
            }
            if m < mu_floor {
                return Err(GraphError::MeasureBelowFloor {
                    id,
                    mu: m,
                    floor: mu_floor,
                });
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(GraphError::DuplicateVertex(id));
            }
            ids.push(id);
            mu.push(m);
        }

        let root = *index
            .get(root)
            .ok_or_else(|| GraphError::UnknownVertex(root.to_owned()))?;

        // First occurrence per unordered pair; a second occurrence must be a
        // consistent reverse orientation (same b, opposite theta).
        let mut seen: HashMap<(usize, usize), (usize, f64, f64)> = HashMap::new();
        let mut edge_list: Vec<EdgeSpec> = Vec::new();
        for e in edges {
            if !e.b.is_finite() {
                return Err(GraphError::NonFinite("b"));
            }
            if !e.theta.is_finite() {
                return Err(GraphError::NonFinite("theta"));
            }
            let ui = *index
                .get(&e.u)
                .ok_or_else(|| GraphError::UnknownVertex(e.u.clone()))?;
            let vi = *index
                .get(&e.v)
                .ok_or_else(|| GraphError::UnknownVertex(e.v.clone()))?;
            if ui == vi {
                return Err(GraphError::SelfLoop(e.u));
            }
            if e.b <= 0.0 {
                return Err(GraphError::NonPositiveWeight {
                    u: e.u,
                    v: e.v,
                    b: e.b,
                });
            }
            if e.theta.abs() > PI {
                return Err(GraphError::PhaseOutOfRange {
                    u: e.u,
                    v: e.v,
                    theta: e.theta,
                });
            }
            let theta = canonicalize_theta(e.theta);
            let key = (ui.min(vi), ui.max(vi));
            match seen.get(&key) {
                None => {
                    seen.insert(key, (ui, e.b, theta));
                    edge_list.push(EdgeSpec {
                        u: e.u,
                        v: e.v,
                        b: e.b,
                        theta,
                    });
                }
                Some(&(first_u, b0, th0)) => {
                    if first_u == ui {
                        return Err(GraphError::DuplicateEdge { u: e.u, v: e.v });
                    }
                    if e.b != b0 {
                        return Err(GraphError::AsymmetricWeight {
                            u: e.u,
                            v: e.v,
                            forward: e.b,
                            backward: b0,
                        });
                    }
                    // The reverse of theta0; pi is its own reverse.
                    let expected = canonicalize_theta(-th0);
                    if theta != expected {
                        return Err(GraphError::AsymmetricPhase {
                            u: e.u,
                            v: e.v,
                            forward: theta,
                            backward: th0,
                        });
                    }
                }
            }
        }

        let mut adj: Vec<Vec<HalfEdge>> = vec![Vec::new(); ids.len()];
        for e in &edge_list {
            let ui = index[&e.u];
            let vi = index[&e.v];
            // One cos/sin evaluation per unordered edge; the reverse phase is
            // the exact conjugate so stored operators are exactly Hermitian.
            let phase = Complex64::new(e.theta.cos(), e.theta.sin());
            adj[ui].push(HalfEdge {
                to: vi,
                b: e.b,
                theta: e.theta,
                phase,
            });
            adj[vi].push(HalfEdge {
                to: ui,
                b: e.b,
                theta: canonicalize_theta(-e.theta),
                phase: phase.conj(),
            });
        }
        for list in &mut adj {
            list.sort_by_key(|h| h.to);
        }

        // Connectivity and radii in one BFS from the root.
        let radius = bfs_distances(&adj, root);
        if let Some(i) = radius.iter().position(|r| *r == u32::MAX) {
            return Err(GraphError::Disconnected(ids[i].clone()));
        }

        Ok(Self {
            ids,
            index,
            mu,
            adj,
            edge_list,
            root,
            mu_floor,
            radius,
            horizon: None,
        })
    }

    /// Mark this graph as the ball `B(x0, N)` of a larger family.
    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = Some(horizon);
        self
    }

    /// Mark this graph as the whole universe: every vertex is complete.
    pub fn as_complete(mut self) -> Self {
        self.horizon = None;
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }

    pub fn horizon(&self) -> Option<u32> {
        self.horizon
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_index(&self, id: &str) -> Result<usize, GraphError> {
        self.index_of(id)
            .ok_or_else(|| GraphError::UnknownVertex(id.to_owned()))
    }

    pub fn mu(&self, idx: usize) -> f64 {
        self.mu[idx]
    }

    pub fn neighbors(&self, idx: usize) -> &[HalfEdge] {
        &self.adj[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    /// Distance from the root, r(x).
    pub fn radius_of(&self, idx: usize) -> u32 {
        self.radius[idx]
    }

    /// Largest r(x) present in this graph.
    pub fn max_radius(&self) -> u32 {
        self.radius.iter().copied().max().unwrap_or(0)
    }

    pub fn edge_list(&self) -> &[EdgeSpec] {
        &self.edge_list
    }

    /// True when every neighbor of `idx` in the underlying (possibly
    /// infinite) graph is present here. Operators may only be evaluated at
    /// complete vertices.
    pub fn is_complete(&self, idx: usize) -> bool {
        match self.horizon {
            None => true,
            Some(h) => self.radius[idx] < h,
        }
    }

    /// Combinatorial distance between two vertices, by BFS.
    pub fn distance(&self, x: &str, y: &str) -> Result<u32, GraphError> {
        let xi = self.require_index(x)?;
        let yi = self.require_index(y)?;
        if xi == yi {
            return Ok(0);
        }
        let dist = bfs_distances(&self.adj, xi);
        // The graph is connected, so yi is always reached.
        Ok(dist[yi])
    }

    /// The ball B(x0, n): vertices with r <= n and edges inside.
    pub fn ball(&self, n: u32) -> Ball {
        let vertices: Vec<usize> = (0..self.len()).filter(|&i| self.radius[i] <= n).collect();
        let mut edges = Vec::new();
        for &i in &vertices {
            for h in &self.adj[i] {
                if i < h.to && self.radius[h.to] <= n {
                    edges.push((i, h.to));
                }
            }
        }
        edges.sort_unstable();
        Ball { n, vertices, edges }
    }

    /// Vertex indices sorted by (radius, index); balls are prefixes of this
    /// ordering, which matrix assembly relies on.
    pub fn vertices_by_radius(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (self.radius[i], i));
        order
    }

    /// Induced subgraph on B(x0, n), marked with horizon n.
    pub fn induced_ball(&self, n: u32) -> Result<Self, GraphError> {
        let keep: Vec<bool> = (0..self.len()).map(|i| self.radius[i] <= n).collect();
        let vertices: Vec<(String, f64)> = (0..self.len())
            .filter(|&i| keep[i])
            .map(|i| (self.ids[i].clone(), self.mu[i]))
            .collect();
        let edges: Vec<EdgeSpec> = self
            .edge_list
            .iter()
            .filter(|e| keep[self.index[&e.u]] && keep[self.index[&e.v]])
            .cloned()
            .collect();
        Ok(Self::new(&self.ids[self.root], self.mu_floor, vertices, edges)?.with_horizon(n))
    }
}

fn bfs_distances(adj: &[Vec<HalfEdge>], start: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    let mut queue = VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    while let Some(x) = queue.pop_front() {
        for h in &adj[x] {
            if dist[h.to] == u32::MAX {
                dist[h.to] = dist[x] + 1;
                queue.push_back(h.to);
            }
        }
    }
    dist
}
