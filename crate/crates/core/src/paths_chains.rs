//! Constructive short Gabriel paths with a squared-length certificate, and
//! descending-chain search.
//!
//! The path construction between sample points `x` and `y` recurses: if
//! `(x, y)` is a Gabriel edge the path is that edge; otherwise the open
//! ball with diameter `[x, y]` contains a sample point, the
//! lexicographically smallest one `z` is picked, and the two sub-paths
//! `(x, z)` and `(z, y)` are concatenated. A point strictly inside the
//! diametral ball sees `[x, y]` under an obtuse angle, so
//! `|z - x|^2 + |y - z|^2 <= |y - x|^2` and by induction the whole path
//! satisfies the certificate `sum of squared hops <= |y - x|^2`. On a
//! finite point set the recursion terminates because the sub-problem
//! diameters strictly decrease through a finite set of values.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{predicates, GeometricGraph, GraphKind};
use crate::grid::UniformGrid;
use crate::point_process::{sq_dist, PointSet};

/// A simple path in the Gabriel graph with its squared-length certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GabrielPath {
    /// Point indices, from source to target.
    pub vertices: Vec<usize>,
    /// Squared Euclidean hop lengths.
    pub sq_lengths: Vec<f64>,
    /// The certificate budget `|target - source|^2`.
    pub budget: f64,
}

impl GabrielPath {
    pub fn hops(&self) -> usize {
        self.sq_lengths.len()
    }

    pub fn sq_length_sum(&self) -> f64 {
        self.sq_lengths.iter().sum()
    }

    pub fn max_hop_length(&self) -> f64 {
        self.sq_lengths.iter().fold(0.0f64, |m, &s| m.max(s)).sqrt()
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    matches!(a.partial_cmp(b), Some(Ordering::Less))
}

/// Lexicographically smallest sample point strictly inside the open ball
/// with diameter `[x, y]`; exact membership decisions.
fn smallest_blocker(
    points: &PointSet,
    grid: &UniformGrid,
    x: usize,
    y: usize,
) -> Option<usize> {
    let px = points.point(x);
    let py = points.point(y);
    let mid: Vec<f64> = px.iter().zip(py).map(|(a, b)| 0.5 * (a + b)).collect();
    let r = 0.5 * sq_dist(px, py).sqrt();
    let mut best: Option<usize> = None;
    grid.for_each_in_ball(&mid, r * (1.0 + 1e-9), |w| {
        if w == x || w == y {
            return;
        }
        if let Some(b) = best {
            if b == w || !lex_less(points.point(w), points.point(b)) {
                return;
            }
        }
        if predicates::in_diametral_ball(px, py, points.point(w)) {
            best = Some(w);
        }
    });
    best
}

/// Short Gabriel path from `x` to `y` (point indices), de-duplicated to a
/// simple path. Cycle excision removes nonnegative terms, so the
/// certificate survives it.
pub fn gabriel_short_path(
    points: &PointSet,
    gab: &GeometricGraph,
    x: usize,
    y: usize,
) -> Result<GabrielPath> {
    if gab.kind != GraphKind::Gabriel {
        return Err(Error::usage("expected a Gabriel graph"));
    }
    if x >= points.len() || y >= points.len() {
        return Err(Error::usage("path endpoints must be sample points"));
    }
    if gab.num_vertices() != points.len() {
        return Err(Error::usage("graph was built over a different point set"));
    }
    if x == y {
        return Ok(GabrielPath { vertices: vec![x], sq_lengths: Vec::new(), budget: 0.0 });
    }
    let edge_set: HashSet<(usize, usize)> =
        gab.edges.iter().map(|e| (e.u, e.v)).collect();
    let is_edge = |a: usize, b: usize| edge_set.contains(&(a.min(b), a.max(b)));

    let dim = points.dim();
    let cell = {
        let vol = points.window.extended().volume();
        (vol / points.len().max(1) as f64).powf(1.0 / dim as f64)
    };
    let grid = UniformGrid::build(dim, points.coords(), cell.max(1e-9));

    // Iterative expansion of the recursion: a stack of segments still to be
    // resolved, emitted left to right.
    let mut vertices = vec![x];
    let mut stack = vec![(x, y)];
    // Each split strictly shrinks the segment through a finite set of
    // values, so the expansion terminates; the cap bounds the work on
    // near-degenerate data.
    let mut work_budget: u64 = 10_000_000;
    while let Some((a, b)) = stack.pop() {
        work_budget = work_budget.checked_sub(1).ok_or_else(|| {
            Error::Numeric("gabriel path recursion exceeded its work budget".into())
        })?;
        if is_edge(a, b) {
            vertices.push(b);
            continue;
        }
        match smallest_blocker(points, &grid, a, b) {
            Some(z) => {
                stack.push((z, b));
                stack.push((a, z));
            }
            None => {
                // No blocker and yet not an edge: the graph disagrees with
                // the predicate, which the construction rules out.
                return Err(Error::usage(
                    "diametral ball is empty but the edge is missing from the graph",
                ));
            }
        }
    }

    // cycle excision: keep the path simple
    loop {
        let mut seen: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut cycle: Option<(usize, usize)> = None;
        for (pos, &v) in vertices.iter().enumerate() {
            if let Some(&first) = seen.get(&v) {
                cycle = Some((first, pos));
                break;
            }
            seen.insert(v, pos);
        }
        match cycle {
            Some((first, pos)) => {
                vertices.drain(first + 1..=pos);
            }
            None => break,
        }
    }

    let sq_lengths: Vec<f64> = vertices
        .windows(2)
        .map(|w| sq_dist(points.point(w[0]), points.point(w[1])))
        .collect();
    let budget = sq_dist(points.point(x), points.point(y));
    Ok(GabrielPath { vertices, sq_lengths, budget })
}

/// Exact verification of the squared-length certificate: the sum of exact
/// squared hop lengths must not exceed the exact squared endpoint distance.
pub fn verify_certificate_exact(points: &PointSet, path: &GabrielPath) -> bool {
    if path.vertices.len() < 2 {
        return true;
    }
    let mut total = BigRational::zero();
    for w in path.vertices.windows(2) {
        total += predicates::sq_dist_exact(points.point(w[0]), points.point(w[1]));
    }
    let budget = predicates::sq_dist_exact(
        points.point(*path.vertices.first().unwrap()),
        points.point(*path.vertices.last().unwrap()),
    );
    total <= budget
}

/// Result of a descending-chain search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSearch {
    /// Longest chain found (point indices); gaps strictly decrease.
    pub chain: Vec<usize>,
    /// True when the work budget ran out before the search space was
    /// exhausted — absence of a longer chain is then not established.
    pub budget_exhausted: bool,
    pub extensions_used: u64,
}

/// Depth-first search for long descending chains: sequences of points whose
/// consecutive gaps strictly decrease. Start pairs are tried in order of
/// decreasing gap; extensions are bounded by a work budget.
pub fn find_descending_chain(
    points: &PointSet,
    min_len: usize,
    work_budget: u64,
) -> Result<ChainSearch> {
    if min_len < 2 {
        return Err(Error::parameter("minimum chain length is 2"));
    }
    let n = points.len();
    let mut search = ChainSearch { chain: Vec::new(), budget_exhausted: false, extensions_used: 0 };
    if n < 2 {
        return Ok(search);
    }
    let dim = points.dim();
    let cell = {
        let vol = points.window.extended().volume();
        (vol / n as f64).powf(1.0 / dim as f64)
    };
    let grid = UniformGrid::build(dim, points.coords(), cell.max(1e-9));

    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_by(|&(a, b), &(c, d)| {
        let g1 = sq_dist(points.point(a), points.point(b));
        let g2 = sq_dist(points.point(c), points.point(d));
        g2.partial_cmp(&g1).unwrap().then((a, b).cmp(&(c, d)))
    });

    let mut budget = work_budget;
    let mut used = vec![false; n];
    for &(a, b) in &pairs {
        if budget == 0 {
            search.budget_exhausted = true;
            break;
        }
        let mut chain = vec![a, b];
        used[a] = true;
        used[b] = true;
        extend_chain(points, &grid, &mut chain, &mut used, &mut budget, &mut search);
        used[a] = false;
        used[b] = false;
        if search.chain.len() >= n {
            break;
        }
    }
    search.extensions_used = work_budget - budget;
    if search.chain.len() < min_len {
        search.chain.clear();
    }
    Ok(search)
}

fn extend_chain(
    points: &PointSet,
    grid: &UniformGrid,
    chain: &mut Vec<usize>,
    used: &mut [bool],
    budget: &mut u64,
    search: &mut ChainSearch,
) {
    if chain.len() > search.chain.len() {
        search.chain = chain.clone();
    }
    if *budget == 0 {
        search.budget_exhausted = true;
        return;
    }
    let last = *chain.last().unwrap();
    let prev = chain[chain.len() - 2];
    let gap = sq_dist(points.point(prev), points.point(last)).sqrt();
    let mut candidates: Vec<usize> = Vec::new();
    grid.for_each_in_ball(points.point(last), gap, |w| {
        if !used[w] && w != last {
            let d = sq_dist(points.point(last), points.point(w));
            if d < gap * gap && d > 0.0 {
                candidates.push(w);
            }
        }
    });
    candidates.sort_unstable();
    candidates.dedup();
    for w in candidates {
        if *budget == 0 {
            search.budget_exhausted = true;
            return;
        }
        *budget -= 1;
        chain.push(w);
        used[w] = true;
        extend_chain(points, grid, chain, used, budget, search);
        used[w] = false;
        chain.pop();
    }
}
