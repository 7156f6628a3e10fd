//! Proximity graphs over point samples: Delaunay triangulation, Gabriel
//! graph and the skeleton of the Voronoi tiling, plus boundary trimming.

pub mod delaunay;
pub mod predicates;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::point_process::{sq_dist, PointSet, Window};

pub use delaunay::{Triangulation, HULL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    #[serde(rename = "dt")]
    Delaunay,
    #[serde(rename = "gab")]
    Gabriel,
    #[serde(rename = "vs")]
    VoronoiSkeleton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrimStatus {
    /// Built over window + buffer, not yet trimmed.
    Untrimmed,
    Trimmed {
        /// True when nothing could be meaningfully trimmed (zero buffer).
        untrusted_boundary: bool,
        /// Whether the restriction to the analysis window is connected.
        connected_in_window: bool,
        removed_edges: usize,
        removed_vertices: usize,
    },
}

/// An embedded undirected graph. For Delaunay/Gabriel graphs the vertices
/// are the sample points; for the Voronoi skeleton they are simplex
/// circumcenters (with a back-reference to the defining simplex).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometricGraph {
    pub kind: GraphKind,
    pub dim: usize,
    pub window: Window,
    pub positions: Vec<f64>,
    pub edges: Vec<Edge>,
    /// Vertices that survive trimming (all true before a trim).
    pub active: Vec<bool>,
    /// VS only: vertex id -> defining simplex id in the source triangulation.
    pub dual_cell: Option<Vec<usize>>,
    /// VS only: vertices that lost an unbounded dual edge at the hull.
    pub hull_vertex: Option<Vec<bool>>,
    pub trim: TrimStatus,
}

impl GeometricGraph {
    pub fn num_vertices(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.positions[v * self.dim..(v + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Adjacency list: per vertex, (neighbor, edge index).
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for (e, edge) in self.edges.iter().enumerate() {
            adj[edge.u].push((edge.v, e));
            adj[edge.v].push((edge.u, e));
        }
        adj
    }

    pub fn degree_of(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    /// Nearest active vertex to a location.
    pub fn nearest_active_vertex(&self, q: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        for v in 0..self.num_vertices() {
            if !self.active[v] {
                continue;
            }
            let d2 = sq_dist(self.position(v), q);
            if d2 < best_d2 {
                best_d2 = d2;
                best = Some(v);
            }
        }
        best
    }

    fn assert_canonical(&self) {
        debug_assert!(self
            .edges
            .iter()
            .all(|e| e.u < e.v && e.u < self.num_vertices() && e.v < self.num_vertices()));
    }
}

fn edge_length(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Delaunay graph (1-skeleton of the triangulation).
pub fn delaunay_graph(tri: &Triangulation, window: &Window) -> GeometricGraph {
    let dim = tri.dim();
    let n = tri.num_points();
    let mut positions = Vec::with_capacity(n * dim);
    for i in 0..n {
        positions.extend_from_slice(tri.point(i));
    }
    let edges = tri
        .edges()
        .into_iter()
        .map(|(u, v)| Edge { u, v, length: edge_length(tri.point(u), tri.point(v)) })
        .collect();
    let g = GeometricGraph {
        kind: GraphKind::Delaunay,
        dim,
        window: window.clone(),
        positions,
        edges,
        active: vec![true; n],
        dual_cell: None,
        hull_vertex: None,
        trim: TrimStatus::Untrimmed,
    };
    g.assert_canonical();
    g
}

/// Gabriel graph: the Delaunay edges whose open diametral ball contains no
/// sample point. Exact decisions via the diametral-dot predicate.
pub fn gabriel(points: &PointSet, tri: &Triangulation) -> Result<GeometricGraph> {
    if tri.num_points() != points.len() {
        return Err(Error::usage("triangulation was built over a different point set"));
    }
    let dim = points.dim();
    for i in 0..points.len() {
        if points.point(i) != tri.point(i) {
            return Err(Error::usage("triangulation was built over a different point set"));
        }
    }
    let n = points.len();
    let mean_spacing = {
        let vol = points.window.extended().volume();
        (vol / n.max(1) as f64).powf(1.0 / dim as f64)
    };
    let grid = UniformGrid::build(dim, points.coords(), mean_spacing.max(1e-9));

    let mut edges = Vec::new();
    for (u, v) in tri.edges() {
        let pu = points.point(u);
        let pv = points.point(v);
        let mid: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| 0.5 * (a + b)).collect();
        let r = 0.5 * edge_length(pu, pv);
        let mut blocked = false;
        grid.for_each_in_ball(&mid, r * (1.0 + 1e-9), |w| {
            if blocked || w == u || w == v {
                return;
            }
            if predicates::in_diametral_ball(pu, pv, points.point(w)) {
                blocked = true;
            }
        });
        if !blocked {
            edges.push(Edge { u, v, length: 2.0 * r });
        }
    }
    let mut positions = Vec::with_capacity(n * dim);
    for i in 0..n {
        positions.extend_from_slice(points.point(i));
    }
    Ok(GeometricGraph {
        kind: GraphKind::Gabriel,
        dim,
        window: points.window.clone(),
        positions,
        edges,
        active: vec![true; n],
        dual_cell: None,
        hull_vertex: None,
        trim: TrimStatus::Untrimmed,
    })
}

/// Voronoi skeleton: vertices are simplex circumcenters, edges join
/// circumcenters of facet-adjacent simplices. Unbounded dual edges at the
/// hull are dropped; the vertices that lost one are flagged.
pub fn voronoi_skeleton(tri: &Triangulation, window: &Window) -> GeometricGraph {
    let dim = tri.dim();
    let m = tri.num_cells();
    let mut positions = Vec::with_capacity(m * dim);
    let mut hull_vertex = vec![false; m];
    for c in 0..m {
        positions.extend_from_slice(tri.circumcenter(c));
    }
    let mut edges = Vec::new();
    for c in 0..m {
        for &nb in tri.cell_neighbors(c) {
            if nb == HULL {
                hull_vertex[c] = true;
            } else if nb > c {
                edges.push(Edge {
                    u: c,
                    v: nb,
                    length: edge_length(tri.circumcenter(c), tri.circumcenter(nb)),
                });
            }
        }
    }
    edges.sort_unstable_by_key(|a| (a.u, a.v));
    GeometricGraph {
        kind: GraphKind::VoronoiSkeleton,
        dim,
        window: window.clone(),
        positions,
        edges,
        active: vec![true; m],
        dual_cell: Some((0..m).collect()),
        hull_vertex: Some(hull_vertex),
        trim: TrimStatus::Untrimmed,
    }
}

/// Is the circumball of simplex `c` contained in `region`?
fn ball_in_region(tri: &Triangulation, c: usize, region: &Window) -> bool {
    let cc = tri.circumcenter(c);
    let r = tri.circumradius(c);
    (0..region.dim).all(|k| {
        cc[k] - r >= region.lower[k] && cc[k] + r <= region.lower[k] + region.sides[k]
    })
}

/// Trim a graph to the analysis region of its window: remove everything
/// whose geometry could depend on points outside the sampled region.
///
/// A simplex is *trusted* when its circumball lies inside the sampled
/// region (window + buffer): its presence in the triangulation is then a
/// function of the sample alone and is stable under any enlargement of the
/// sample. For Delaunay/Gabriel graphs every edge of an untrusted simplex
/// is removed; for the Voronoi skeleton the vertices dual to untrusted
/// simplices are removed.
pub fn trim_to_analysis_region(
    graph: &GeometricGraph,
    tri: &Triangulation,
    window: &Window,
) -> Result<GeometricGraph> {
    trim_with_trust_region(graph, tri, window, &window.extended())
}

/// Trim against an explicit trust region (the region known to be fully
/// sampled). `trim_to_analysis_region` uses `window + buffer`.
pub fn trim_with_trust_region(
    graph: &GeometricGraph,
    tri: &Triangulation,
    window: &Window,
    trust: &Window,
) -> Result<GeometricGraph> {
    let mut out = graph.clone();
    if window.buffer == 0.0 && trust == &window.extended() {
        out.trim = TrimStatus::Trimmed {
            untrusted_boundary: true,
            connected_in_window: is_connected_in_window(&out, window),
            removed_edges: 0,
            removed_vertices: 0,
        };
        return Ok(out);
    }
    let trusted: Vec<bool> =
        (0..tri.num_cells()).map(|c| ball_in_region(tri, c, trust)).collect();

    let removed_edges;
    let mut removed_vertices = 0;
    match graph.kind {
        GraphKind::Delaunay => {
            // An edge of a trusted simplex is present in the triangulation
            // of any enlargement of the sample: the simplex's empty ball is
            // fully observed. Everything else depends on the collar.
            use std::collections::HashSet;
            let mut keep: HashSet<(usize, usize)> = HashSet::new();
            let k = tri.dim() + 1;
            for c in 0..tri.num_cells() {
                if !trusted[c] {
                    continue;
                }
                let vs = tri.cell(c);
                for i in 0..k {
                    for j in (i + 1)..k {
                        keep.insert((vs[i].min(vs[j]), vs[i].max(vs[j])));
                    }
                }
            }
            let before = out.edges.len();
            out.edges.retain(|e| keep.contains(&(e.u, e.v)));
            removed_edges = before - out.edges.len();
            removed_vertices = deactivate_isolated(&mut out);
        }
        GraphKind::Gabriel => {
            // A Gabriel edge is stable exactly when its own diametral ball
            // is fully observed.
            let before = out.edges.len();
            let dim = graph.dim;
            let positions = graph.positions.clone();
            out.edges.retain(|e| {
                let pu = &positions[e.u * dim..(e.u + 1) * dim];
                let pv = &positions[e.v * dim..(e.v + 1) * dim];
                let r = e.length / 2.0;
                (0..dim).all(|k| {
                    let mid = 0.5 * (pu[k] + pv[k]);
                    mid - r >= trust.lower[k] && mid + r <= trust.lower[k] + trust.sides[k]
                })
            });
            removed_edges = before - out.edges.len();
            removed_vertices = deactivate_isolated(&mut out);
        }
        GraphKind::VoronoiSkeleton => {
            let before = out.edges.len();
            out.edges.retain(|e| trusted[e.u] && trusted[e.v]);
            removed_edges = before - out.edges.len();
            for v in 0..out.num_vertices() {
                if out.active[v] && !trusted[v] {
                    out.active[v] = false;
                    removed_vertices += 1;
                }
            }
        }
    }
    out.trim = TrimStatus::Trimmed {
        untrusted_boundary: removed_edges == 0 && removed_vertices == 0,
        connected_in_window: is_connected_in_window(&out, window),
        removed_edges,
        removed_vertices,
    };
    Ok(out)
}

fn deactivate_isolated(graph: &mut GeometricGraph) -> usize {
    let mut touched = vec![false; graph.num_vertices()];
    for e in &graph.edges {
        touched[e.u] = true;
        touched[e.v] = true;
    }
    let mut removed = 0;
    for v in 0..graph.num_vertices() {
        if graph.active[v] && !touched[v] {
            graph.active[v] = false;
            removed += 1;
        }
    }
    removed
}

/// Connectivity of the active subgraph restricted to the analysis window.
fn is_connected_in_window(graph: &GeometricGraph, window: &Window) -> bool {
    let n = graph.num_vertices();
    let in_window: Vec<bool> = (0..n)
        .map(|v| graph.active[v] && window.contains(graph.position(v)))
        .collect();
    let total = in_window.iter().filter(|&&b| b).count();
    if total <= 1 {
        return true;
    }
    let adj = graph.adjacency();
    let start = (0..n).find(|&v| in_window[v]).unwrap();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 0;
    while let Some(v) = stack.pop() {
        if in_window[v] {
            reached += 1;
        }
        for &(w, _) in &adj[v] {
            // paths may detour through the collar
            if !seen[w] && graph.active[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    reached == total
}
