//! Shared oracles for the integration suites. Everything here is
//! deliberately independent of the construction paths it checks: brute
//! force enumeration for triangulations, a bisector-interval scan for
//! Voronoi adjacency, and the weighted matrix-tree identity for effective
//! resistances.

#![allow(dead_code)]

use std::collections::HashSet;

use geowalk_core::geometry::predicates::{incircle2d, insphere3d, orient2d, orient3d, Sign};
use geowalk_core::geometry::{Edge, GeometricGraph, GraphKind, TrimStatus};
use geowalk_core::network::Network;
use geowalk_core::point_process::{PointSet, ProcessDescriptor, Window};
use geowalk_core::rng::substream_rng;
use rand::Rng;

pub fn pointset(dim: usize, coords: Vec<f64>) -> PointSet {
    let window = Window::new(dim, vec![-1000.0; dim], vec![2000.0; dim], 0.0).unwrap();
    PointSet::from_coords(window, ProcessDescriptor::Ppp { intensity: 1.0 }, 0, coords, None)
        .unwrap()
}

/// `n` uniform points in `[0, span]^dim`, reproducible.
pub fn random_points(dim: usize, n: usize, span: f64, seed: u64) -> PointSet {
    let mut rng = substream_rng(seed, 900);
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>() * span).collect();
    pointset(dim, coords)
}

/// Brute-force Delaunay in the plane: every triple whose (exactly decided)
/// circumcircle holds no other point. For points in general position these
/// are exactly the Delaunay triangles.
pub fn brute_force_delaunay_2d(points: &PointSet) -> HashSet<Vec<usize>> {
    let n = points.len();
    let p = |i: usize| points.point(i);
    let mut out = HashSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let ori = orient2d(p(i), p(j), p(k));
                if ori == Sign::Zero {
                    continue;
                }
                let (a, b) = if ori == Sign::Positive { (j, k) } else { (k, j) };
                let mut empty = true;
                for q in 0..n {
                    if q == i || q == j || q == k {
                        continue;
                    }
                    if incircle2d(p(i), p(a), p(b), p(q)) == Sign::Positive {
                        empty = false;
                        break;
                    }
                }
                if empty {
                    out.insert(vec![i, j, k]);
                }
            }
        }
    }
    out
}

/// Brute-force Delaunay in space: every 4-tuple with an empty circumsphere.
pub fn brute_force_delaunay_3d(points: &PointSet) -> HashSet<Vec<usize>> {
    let n = points.len();
    let p = |i: usize| points.point(i);
    let mut out = HashSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    let ori = orient3d(p(i), p(j), p(k), p(l));
                    if ori == Sign::Zero {
                        continue;
                    }
                    let (a, b) = if ori == Sign::Positive { (j, k) } else { (k, j) };
                    let mut empty = true;
                    for q in 0..n {
                        if q == i || q == j || q == k || q == l {
                            continue;
                        }
                        if insphere3d(p(i), p(a), p(b), p(l), p(q)) == Sign::Positive {
                            empty = false;
                            break;
                        }
                    }
                    if empty {
                        out.insert(vec![i, j, k, l]);
                    }
                }
            }
        }
    }
    out
}

pub fn cells_as_sets(tri: &geowalk_core::geometry::Triangulation) -> HashSet<Vec<usize>> {
    (0..tri.num_cells())
        .map(|c| {
            let mut vs: Vec<usize> = tri.cell(c).to_vec();
            vs.sort_unstable();
            vs
        })
        .collect()
}

/// Voronoi-adjacency oracle in the plane, independent of any in-circle
/// predicate: `(i, j)` are Delaunay neighbors iff some point of the
/// bisector line is strictly closer to `i` (and `j`) than to every other
/// sample point, i.e. the interval of bisector parameters not forbidden by
/// any third point is nonempty.
pub fn voronoi_dual_edges_2d(points: &PointSet) -> HashSet<(usize, usize)> {
    let n = points.len();
    let p = |i: usize| points.point(i);
    let mut out = HashSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pi = p(i);
            let pj = p(j);
            let mid = [(pi[0] + pj[0]) / 2.0, (pi[1] + pj[1]) / 2.0];
            // direction along the bisector
            let u = [-(pj[1] - pi[1]), pj[0] - pi[0]];
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            let mut feasible = true;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let pk = p(k);
                // closer-to-k-than-to-i at parameter t iff A - 2 t <u, k - i> < 0
                let a_k = (pk[0] * pk[0] + pk[1] * pk[1])
                    - (pi[0] * pi[0] + pi[1] * pi[1])
                    - 2.0 * (mid[0] * (pk[0] - pi[0]) + mid[1] * (pk[1] - pi[1]));
                let slope = 2.0 * (u[0] * (pk[0] - pi[0]) + u[1] * (pk[1] - pi[1]));
                if slope.abs() < 1e-300 {
                    if a_k <= 0.0 {
                        feasible = false;
                        break;
                    }
                    continue;
                }
                // forbidden when a_k - t * slope <= 0
                let t = a_k / slope;
                if slope > 0.0 {
                    hi = hi.min(t);
                } else {
                    lo = lo.max(t);
                }
            }
            if feasible && lo < hi {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Weighted spanning-tree (matrix-tree) effective resistance between two
/// vertices: the ratio of the doubly-reduced to the singly-reduced
/// Laplacian determinant. Dense LU, adequate for n <= 10.
pub fn matrix_tree_resistance(net: &Network, a: usize, b: usize) -> f64 {
    let n = net.graph.num_vertices();
    let mut lap = vec![vec![0.0f64; n]; n];
    for (e, edge) in net.graph.edges.iter().enumerate() {
        let c = net.conductance[e];
        lap[edge.u][edge.u] += c;
        lap[edge.v][edge.v] += c;
        lap[edge.u][edge.v] -= c;
        lap[edge.v][edge.u] -= c;
    }
    let minor = |rows: &[usize]| -> f64 {
        let keep: Vec<usize> = (0..n).filter(|v| !rows.contains(v)).collect();
        let m = keep.len();
        let mut mat: Vec<Vec<f64>> =
            keep.iter().map(|&r| keep.iter().map(|&c| lap[r][c]).collect()).collect();
        // LU with partial pivoting
        let mut det = 1.0f64;
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| mat[x][col].abs().partial_cmp(&mat[y][col].abs()).unwrap())
                .unwrap();
            if mat[piv][col].abs() < 1e-300 {
                return 0.0;
            }
            if piv != col {
                mat.swap(piv, col);
                det = -det;
            }
            det *= mat[col][col];
            for row in (col + 1)..m {
                let f = mat[row][col] / mat[col][col];
                for c2 in col..m {
                    mat[row][c2] -= f * mat[col][c2];
                }
            }
        }
        det
    };
    minor(&[a, b]) / minor(&[a])
}

/// Random connected network on <= `max_n` vertices with the given
/// conductance model applied to random positions.
pub fn random_small_network(
    max_n: usize,
    seed: u64,
    model: geowalk_core::network::ConductanceModel,
) -> Network {
    let mut rng = substream_rng(seed, 901);
    let n = 2 + (rng.random::<u64>() as usize) % (max_n - 1);
    let dim = 2;
    let positions: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>() * 8.0).collect();
    let mut pairs = Vec::new();
    // random spanning tree for connectivity
    for v in 1..n {
        let u = (rng.random::<u64>() as usize) % v;
        pairs.push((u, v));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < 0.35 && !pairs.contains(&(u, v)) {
                pairs.push((u, v));
            }
        }
    }
    let window = Window::new(2, vec![-100.0, -100.0], vec![200.0, 200.0], 0.0).unwrap();
    let edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(u, v)| {
            let len = geowalk_core::point_process::sq_dist(
                &positions[u * 2..u * 2 + 2],
                &positions[v * 2..v * 2 + 2],
            )
            .sqrt();
            Edge { u, v, length: len }
        })
        .collect();
    let graph = GeometricGraph {
        kind: GraphKind::Delaunay,
        dim,
        window,
        positions,
        edges,
        active: vec![true; n],
        dual_cell: None,
        hull_vertex: None,
        trim: TrimStatus::Untrimmed,
    };
    geowalk_core::network::assign_conductances(graph, model).unwrap()
}

/// Spearman rank correlation.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Exact Poisson upper tail `P[N >= m]` for small means.
pub fn poisson_tail(mean: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mut term = (-mean).exp();
    let mut below = 0.0;
    for k in 0..m {
        if k > 0 {
            term *= mean / k as f64;
        }
        below += term;
    }
    (1.0 - below).max(0.0)
}
