//! Good-box fields over a side-M lattice, reference vertices, verified
//! inter-box paths, and rough-embedding constants.
//!
//! Two goodness notions are supported. The Voronoi-skeleton variant asks
//! for a bounded point count and no empty sub-box among `alpha_d^d`
//! sub-boxes. The Gabriel variant asks every one of `alpha_{d,m}^d`
//! sub-boxes to hold between 1 and `m` points; the default `alpha_{d,m}`
//! comes from the asymptotic constant `beta_d` and can be overridden with a
//! smaller odd value for finite-volume experiments (the default makes good
//! boxes unobservably rare at any simulable scale; see
//! [`gabriel_feasibility_window`]).

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometricGraph, GraphKind, Triangulation};
use crate::network::Network;
use crate::paths_chains::{gabriel_short_path, GabrielPath};
use crate::point_process::{
    sample, sq_dist, FractionEstimate, PointSet, ProcessDescriptor, Window,
};
use crate::rng::{substream_rng, substream_seed};

/// Default target probability for stochastic domination. The true
/// domination threshold depends on the lattice dimension and the dependence
/// range and is not specified numerically anywhere usable; a conservative
/// value is used and exposed as configuration rather than silently invented.
pub const DEFAULT_P_STAR: f64 = 0.99;

/// Sub-box count per axis for the Voronoi-skeleton goodness notion.
pub fn alpha_d(d: usize) -> u64 {
    6 * (d as f64).sqrt().ceil() as u64
}

/// Asymptotic constant controlling the Gabriel sub-box scale.
pub fn beta_d(d: usize) -> f64 {
    let df = d as f64;
    2f64.powi(2 * d as i32 + 2) * (df + 3.0 + 2.0 * (df + 3.0).powf(1.5))
}

/// The odd integer in `[beta_d m^2 + sqrt(d) + 1, beta_d m^2 + sqrt(d) + 3)`.
pub fn alpha_dm(d: usize, m: u64) -> u64 {
    let lower = beta_d(d) * (m as f64) * (m as f64) + (d as f64).sqrt() + 1.0;
    let mut a = lower.ceil() as u64;
    if a.is_multiple_of(2) {
        a += 1;
    }
    a
}

/// Admissible range for `M^d` in the Gabriel construction given the
/// void-probability rate `c1`, the count-bound rate `c4` and the
/// domination target: `[alpha^d / c1 * log(2 alpha^d / (1 - p*)),
/// alpha^d / c4 * (m - log(2 alpha^d / (1 - p*)))]`. The range is empty
/// unless `m` is large; with small `m` the construction is infeasible at
/// any window size.
pub fn gabriel_feasibility_window(
    d: usize,
    m: u64,
    alpha: u64,
    c1: f64,
    c4: f64,
    p_star: f64,
) -> (f64, f64) {
    let ad = (alpha as f64).powi(d as i32);
    let log_term = (2.0 * ad / (1.0 - p_star)).ln();
    (ad / c1 * log_term, ad / c4 * (m as f64 - log_term))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GoodBoxParams {
    Vs { c4: f64 },
    Gabriel { m: u64, alpha: u64 },
}

/// A verified inter-box path: vertex ids in the graph the field was built
/// against (sample-point ids for Gabriel, skeleton-vertex ids for VS).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxPath {
    pub vertices: Vec<usize>,
    pub hops: usize,
    pub max_edge_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PathOutcome {
    Verified(BoxPath),
    /// The pair failed one of the construction's assertions; the reason is
    /// recorded and the pair is excluded from the verified set.
    Demoted { reason: String },
}

/// Lattice of side-M boxes with goodness flags, per-good-box reference
/// vertices and verified paths between adjacent good pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxField {
    pub dim: usize,
    pub box_side: f64,
    pub z_lo: Vec<i64>,
    pub z_hi: Vec<i64>,
    pub flags: Vec<bool>,
    pub reference: Vec<Option<usize>>,
    pub params: GoodBoxParams,
    /// True when the window did not tile evenly and partial boxes were
    /// excluded from the lattice.
    pub excluded_partial: bool,
    pub paths: BTreeMap<(usize, usize), BoxPath>,
    pub demotions: Vec<((usize, usize), String)>,
}

impl BoxField {
    pub fn num_boxes(&self) -> usize {
        self.flags.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim).map(|k| (self.z_hi[k] - self.z_lo[k] + 1) as usize).collect()
    }

    pub fn z_of(&self, idx: usize) -> Vec<i64> {
        let shape = self.shape();
        let mut rem = idx;
        let mut z = vec![0i64; self.dim];
        for k in (0..self.dim).rev() {
            z[k] = self.z_lo[k] + (rem % shape[k]) as i64;
            rem /= shape[k];
        }
        z
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        let shape = self.shape();
        let mut idx = 0usize;
        for k in 0..self.dim {
            if z[k] < self.z_lo[k] || z[k] > self.z_hi[k] {
                return None;
            }
            idx = idx * shape[k] + (z[k] - self.z_lo[k]) as usize;
        }
        Some(idx)
    }

    pub fn box_center(&self, idx: usize) -> Vec<f64> {
        self.z_of(idx).iter().map(|&zk| zk as f64 * self.box_side).collect()
    }

    /// Closed membership test for box `idx`.
    pub fn box_contains(&self, idx: usize, p: &[f64]) -> bool {
        let c = self.box_center(idx);
        let h = self.box_side / 2.0;
        (0..self.dim).all(|k| (p[k] - c[k]).abs() <= h)
    }

    pub fn good_count(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }

    /// Lattice-adjacent pairs of good boxes, each reported once with
    /// ascending indices.
    pub fn adjacent_good_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for idx in 0..self.num_boxes() {
            if !self.flags[idx] {
                continue;
            }
            let z = self.z_of(idx);
            for k in 0..self.dim {
                let mut zn = z.clone();
                zn[k] += 1;
                if let Some(j) = self.index_of(&zn) {
                    if self.flags[j] {
                        out.push((idx.min(j), idx.max(j)));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Lattice ranges for boxes fully inside the window.
fn lattice_ranges(window: &Window, m_side: f64) -> Result<(Vec<i64>, Vec<i64>, bool)> {
    let mut z_lo = Vec::with_capacity(window.dim);
    let mut z_hi = Vec::with_capacity(window.dim);
    let mut partial = false;
    for k in 0..window.dim {
        let lo = window.lower[k];
        let hi = window.lower[k] + window.sides[k];
        let zl = ((lo + m_side / 2.0) / m_side).ceil() as i64;
        let zh = ((hi - m_side / 2.0) / m_side).floor() as i64;
        if zh < zl {
            return Err(Error::parameter(format!(
                "window side {k} is too small for boxes of side {m_side}"
            )));
        }
        // the tiling is uneven when the window extends beyond the covered range
        let covered_lo = zl as f64 * m_side - m_side / 2.0;
        let covered_hi = zh as f64 * m_side + m_side / 2.0;
        if (covered_lo - lo).abs() > 1e-9 * m_side || (covered_hi - hi).abs() > 1e-9 * m_side {
            partial = true;
        }
        z_lo.push(zl);
        z_hi.push(zh);
    }
    Ok((z_lo, z_hi, partial))
}

fn empty_field(
    window: &Window,
    m_side: f64,
    params: GoodBoxParams,
) -> Result<BoxField> {
    let (z_lo, z_hi, partial) = lattice_ranges(window, m_side)?;
    let total: usize = (0..window.dim).map(|k| (z_hi[k] - z_lo[k] + 1) as usize).product();
    Ok(BoxField {
        dim: window.dim,
        box_side: m_side,
        z_lo,
        z_hi,
        flags: vec![false; total],
        reference: vec![None; total],
        params,
        excluded_partial: partial,
        paths: BTreeMap::new(),
        demotions: Vec::new(),
    })
}

fn subbox_index(field: &BoxField, box_idx: usize, p: &[f64], alpha: u64) -> usize {
    let c = field.box_center(box_idx);
    let sub = field.box_side / alpha as f64;
    let mut idx = 0usize;
    for k in 0..field.dim {
        let offset = p[k] - (c[k] - field.box_side / 2.0);
        let s = ((offset / sub).floor() as i64).clamp(0, alpha as i64 - 1) as usize;
        idx = idx * alpha as usize + s;
    }
    idx
}

/// Voronoi-skeleton goodness: point count at most `2 c4 M^d` and every one
/// of the `alpha_d^d` sub-boxes nonempty.
pub fn classify_good_boxes_vs(
    points: &PointSet,
    window: &Window,
    m_side: f64,
    c4: f64,
) -> Result<BoxField> {
    if !(m_side >= 1.0) {
        return Err(Error::parameter("box side must be at least 1"));
    }
    if !(c4 > 0.0) {
        return Err(Error::parameter("c4 must be positive"));
    }
    let mut field = empty_field(window, m_side, GoodBoxParams::Vs { c4 })?;
    let alpha = alpha_d(window.dim);
    let subcount = (alpha as usize).pow(window.dim as u32);
    let nboxes = field.num_boxes();
    let mut counts = vec![0u64; nboxes];
    let mut occupied = vec![false; nboxes * subcount];
    for p in points.iter_points() {
        if let Some(idx) = box_of(&field, p) {
            counts[idx] += 1;
            occupied[idx * subcount + subbox_index(&field, idx, p, alpha)] = true;
        }
    }
    let cap = 2.0 * c4 * m_side.powi(window.dim as i32);
    for idx in 0..nboxes {
        let full = occupied[idx * subcount..(idx + 1) * subcount].iter().all(|&b| b);
        field.flags[idx] = counts[idx] as f64 <= cap && full;
    }
    Ok(field)
}

fn box_of(field: &BoxField, p: &[f64]) -> Option<usize> {
    let m = field.box_side;
    let mut z = Vec::with_capacity(field.dim);
    for k in 0..field.dim {
        // boxes are M z + [-M/2, M/2)
        z.push(((p[k] + m / 2.0) / m).floor() as i64);
    }
    field.index_of(&z)
}

/// Gabriel goodness: every one of the `alpha^d` sub-boxes holds between 1
/// and `m` points. `alpha_override` replaces the asymptotic default (it
/// must be odd so that the box center falls at a sub-box center).
pub fn classify_good_boxes_gabriel(
    points: &PointSet,
    window: &Window,
    m_side: f64,
    m: u64,
    alpha_override: Option<u64>,
) -> Result<BoxField> {
    if m < 1 {
        return Err(Error::parameter("occupancy cap m must be at least 1"));
    }
    if !(m_side > 0.0) {
        return Err(Error::parameter("box side must be positive"));
    }
    let alpha = match alpha_override {
        Some(a) => {
            if a % 2 == 0 || a == 0 {
                return Err(Error::parameter("alpha must be odd and positive"));
            }
            a
        }
        None => alpha_dm(window.dim, m),
    };
    let subcount = (alpha as usize)
        .checked_pow(window.dim as u32)
        .filter(|&s| s <= 1usize << 34)
        .ok_or_else(|| {
            Error::parameter(format!(
                "alpha = {alpha} yields an intractable number of sub-boxes; \
                 supply an odd alpha override for finite-volume runs"
            ))
        })?;
    let mut field = empty_field(window, m_side, GoodBoxParams::Gabriel { m, alpha })?;
    let nboxes = field.num_boxes();
    let mut counts = vec![0u32; nboxes * subcount];
    for p in points.iter_points() {
        if let Some(idx) = box_of(&field, p) {
            counts[idx * subcount + subbox_index(&field, idx, p, alpha)] += 1;
        }
    }
    for idx in 0..nboxes {
        let ok = counts[idx * subcount..(idx + 1) * subcount]
            .iter()
            .all(|&c| c >= 1 && c as u64 <= m);
        field.flags[idx] = ok;
        if ok {
            // reference vertex: nearest sample point to the box center,
            // searched within the central sub-box
            let center = field.box_center(idx);
            let sub = m_side / alpha as f64;
            let mut best: Option<(usize, f64)> = None;
            for i in 0..points.len() {
                let p = points.point(i);
                if (0..field.dim).all(|k| (p[k] - center[k]).abs() <= sub / 2.0) {
                    let d2 = sq_dist(p, &center);
                    if best.is_none_or(|(_, bd)| d2 < bd) {
                        best = Some((i, d2));
                    }
                }
            }
            field.reference[idx] = best.map(|(i, _)| i);
            if field.reference[idx].is_none() {
                field.flags[idx] = false;
            }
        }
    }
    Ok(field)
}

/// Pick reference vertices for a VS field: for each good box, the skeleton
/// vertex on the boundary of the Voronoi cell owning the box center,
/// nearest to that center. Boxes whose reference lands outside the box are
/// demoted (cannot happen when the sub-box condition truly holds).
pub fn assign_vs_reference_vertices(
    field: &mut BoxField,
    points: &PointSet,
    tri: &Triangulation,
    vs: &GeometricGraph,
) -> Result<()> {
    if !matches!(field.params, GoodBoxParams::Vs { .. }) {
        return Err(Error::usage("field was not classified with the VS parameters"));
    }
    if vs.kind != GraphKind::VoronoiSkeleton {
        return Err(Error::usage("expected a Voronoi skeleton graph"));
    }
    let vertex_cells = tri.vertex_cells();
    for idx in 0..field.num_boxes() {
        if !field.flags[idx] {
            continue;
        }
        let center = field.box_center(idx);
        let nucleus = points
            .nearest(&center)
            .ok_or_else(|| Error::usage("empty point set"))?;
        let mut best: Option<(usize, f64)> = None;
        for &c in &vertex_cells[nucleus] {
            if !vs.active[c] {
                continue;
            }
            let d2 = sq_dist(vs.position(c), &center);
            if best.is_none_or(|(bc, bd)| d2 < bd || (d2 == bd && c < bc)) {
                best = Some((c, d2));
            }
        }
        match best {
            Some((c, _)) if field.box_contains(idx, vs.position(c)) => {
                field.reference[idx] = Some(c);
            }
            _ => {
                field.flags[idx] = false;
                field.demotions.push(((idx, idx), "reference vertex left the box".into()));
            }
        }
    }
    Ok(())
}

/// Nuclei of the Voronoi cells crossed by the segment `[a, b]`, in crossing
/// order: the lower envelope of the squared-distance functions along the
/// segment, restricted to `candidates`.
fn stabbed_nuclei(
    points: &PointSet,
    candidates: &[usize],
    a: &[f64],
    b: &[f64],
) -> Vec<usize> {
    let dim = points.dim();
    let dir: Vec<f64> = (0..dim).map(|k| b[k] - a[k]).collect();
    let at = |t: f64| -> Vec<f64> { (0..dim).map(|k| a[k] + t * dir[k]).collect() };
    let mut cur = match candidates
        .iter()
        .min_by(|&&x, &&y| {
            let dx = sq_dist(points.point(x), &at(0.0));
            let dy = sq_dist(points.point(y), &at(0.0));
            dx.partial_cmp(&dy).unwrap().then(x.cmp(&y))
        }) {
        Some(&c) => c,
        None => return Vec::new(),
    };
    let mut out = vec![cur];
    let mut t = 0.0f64;
    let cap = candidates.len() + 2;
    while out.len() <= cap {
        // crossing of y against cur: dist²(p(t), y) = dist²(p(t), cur) is
        // affine in t with slope -2 <dir, y - cur>
        let pc = points.point(cur);
        let mut best: Option<(f64, usize)> = None;
        for &y in candidates {
            if y == cur {
                continue;
            }
            let py = points.point(y);
            let mut c0 = 0.0;
            let mut denom = 0.0;
            for k in 0..dim {
                c0 += (py[k] - pc[k]) * (py[k] + pc[k] - 2.0 * a[k]);
                denom += dir[k] * (py[k] - pc[k]);
            }
            let denom = 2.0 * denom;
            if denom <= 0.0 {
                continue;
            }
            let tstar = c0 / denom;
            if tstar >= t - 1e-12 && tstar <= 1.0 {
                let better = match best {
                    None => true,
                    Some((bt, by)) => tstar < bt || (tstar == bt && y < by),
                };
                if better {
                    best = Some((tstar, y));
                }
            }
        }
        match best {
            Some((tstar, y)) => {
                t = tstar.max(t);
                cur = y;
                out.push(cur);
            }
            None => break,
        }
    }
    out
}

fn euclid_binomial(n: f64, d: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..d {
        acc *= (n - i as f64).max(0.0);
    }
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    acc / fact
}

/// Path-construction budgets implied by the Gabriel parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathBudget {
    /// Total hop bound `2 alpha^d m - 1`.
    pub max_hops: f64,
    /// Per-edge length bound `sqrt(d+3) M / alpha`.
    pub max_edge_length: f64,
    /// Long edges have length at least `M / (2^(d+1) alpha m)`.
    pub long_edge_threshold: f64,
    /// At most `2^(2d+2) (d+3) m^2` long edges per segment.
    pub max_long_edges_per_segment: f64,
    /// Per-segment squared-length budget `(d+3) M^2 / alpha^2`.
    pub segment_sq_budget: f64,
    /// Each segment path stays in the ball of this radius around the
    /// sub-box center.
    pub containment_radius: f64,
}

pub fn gabriel_path_budget(d: usize, m: u64, alpha: u64, m_side: f64) -> PathBudget {
    let df = d as f64;
    let af = alpha as f64;
    PathBudget {
        max_hops: 2.0 * af.powi(d as i32) * m as f64 - 1.0,
        max_edge_length: (df + 3.0).sqrt() * m_side / af,
        long_edge_threshold: m_side / (2f64.powi(d as i32 + 1) * af * m as f64),
        max_long_edges_per_segment: 2f64.powi(2 * d as i32 + 2) * (df + 3.0) * (m as f64).powi(2),
        segment_sq_budget: (df + 3.0) * m_side * m_side / (af * af),
        containment_radius: m_side / 2.0,
    }
}

const LENGTH_SLACK: f64 = 1.0 + 1e-9;

/// Voronoi-skeleton path between the reference vertices of two adjacent
/// good boxes, along boundaries of the cells crossed by the center segment.
pub fn build_box_path_vs(
    points: &PointSet,
    tri: &Triangulation,
    vs: &GeometricGraph,
    field: &mut BoxField,
    z1: usize,
    z2: usize,
) -> Result<PathOutcome> {
    let c4 = match field.params {
        GoodBoxParams::Vs { c4 } => c4,
        _ => return Err(Error::usage("field was not classified with the VS parameters")),
    };
    if z1 == z2 {
        let v = field.reference[z1].ok_or_else(|| Error::usage("box has no reference vertex"))?;
        return Ok(PathOutcome::Verified(BoxPath {
            vertices: vec![v],
            hops: 0,
            max_edge_length: 0.0,
        }));
    }
    let (z1, z2) = (z1.min(z2), z1.max(z2));
    validate_adjacent_good(field, z1, z2)?;
    let (v1, v2) = (
        field.reference[z1].ok_or_else(|| Error::usage("box has no reference vertex"))?,
        field.reference[z2].ok_or_else(|| Error::usage("box has no reference vertex"))?,
    );

    let ca = field.box_center(z1);
    let cb = field.box_center(z2);
    // candidate nuclei: sample points within the dilated union of the boxes
    let h = field.box_side; // M/2 margin on top of the union suffices
    let candidates: Vec<usize> = (0..points.len())
        .filter(|&i| {
            let p = points.point(i);
            (0..field.dim).all(|k| {
                let lo = ca[k].min(cb[k]) - h;
                let hi = ca[k].max(cb[k]) + h;
                p[k] >= lo && p[k] <= hi
            })
        })
        .collect();
    let stabbed: HashSet<usize> = stabbed_nuclei(points, &candidates, &ca, &cb).into_iter().collect();
    if stabbed.is_empty() {
        return Ok(demote(field, z1, z2, "no stabbed cells along the segment"));
    }

    // edges of the skeleton lying on the boundary of a stabbed cell
    let dual = vs.dual_cell.as_ref().expect("VS graph carries dual cells");
    let mut adj: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (e, edge) in vs.edges.iter().enumerate() {
        let fa = tri.cell(dual[edge.u]);
        let fb = tri.cell(dual[edge.v]);
        let on_stabbed_boundary =
            fa.iter().filter(|v| fb.contains(v)).any(|v| stabbed.contains(v));
        if on_stabbed_boundary {
            adj.entry(edge.u).or_default().push((edge.v, e));
            adj.entry(edge.v).or_default().push((edge.u, e));
        }
    }

    // breadth-first shortest-hop path, deterministic neighbor order
    for lst in adj.values_mut() {
        lst.sort_unstable();
    }
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(v1);
    prev.insert(v1, v1);
    while let Some(u) = queue.pop_front() {
        if u == v2 {
            break;
        }
        if let Some(nbrs) = adj.get(&u) {
            for &(w, _) in nbrs {
                if let std::collections::hash_map::Entry::Vacant(slot) = prev.entry(w) {
                    slot.insert(u);
                    queue.push_back(w);
                }
            }
        }
    }
    if !prev.contains_key(&v2) {
        return Ok(demote(field, z1, z2, "no skeleton path along stabbed cell boundaries"));
    }
    let mut vertices = vec![v2];
    while *vertices.last().unwrap() != v1 {
        let u = prev[vertices.last().unwrap()];
        vertices.push(u);
    }
    vertices.reverse();

    // assertions from the construction
    let m_side = field.box_side;
    let df = field.dim as f64;
    let cap_count = 4.0 * c4 * m_side.powi(field.dim as i32);
    let hop_budget = cap_count * euclid_binomial(cap_count, field.dim);
    let max_len_budget = (df + 3.0).sqrt() * m_side;
    let mut max_edge_length = 0.0f64;
    for w in vertices.windows(2) {
        let len = sq_dist(vs.position(w[0]), vs.position(w[1])).sqrt();
        max_edge_length = max_edge_length.max(len);
    }
    for &v in &vertices {
        let p = vs.position(v);
        if !(field.box_contains(z1, p) || field.box_contains(z2, p)) {
            return Ok(demote(field, z1, z2, "path leaves the box union"));
        }
    }
    let hops = vertices.len() - 1;
    if (hops as f64) > hop_budget {
        return Ok(demote(field, z1, z2, "hop count exceeds the budget"));
    }
    if max_edge_length > max_len_budget * LENGTH_SLACK {
        return Ok(demote(field, z1, z2, "edge length exceeds sqrt(d+3) M"));
    }
    let path = BoxPath { vertices, hops, max_edge_length };
    field.paths.insert((z1, z2), path.clone());
    Ok(PathOutcome::Verified(path))
}

fn validate_adjacent_good(field: &BoxField, z1: usize, z2: usize) -> Result<()> {
    if z1 >= field.num_boxes() || z2 >= field.num_boxes() {
        return Err(Error::usage("box index out of range"));
    }
    if !field.flags[z1] || !field.flags[z2] {
        return Err(Error::usage("both boxes must be good"));
    }
    let za = field.z_of(z1);
    let zb = field.z_of(z2);
    let dist: i64 = (0..field.dim).map(|k| (za[k] - zb[k]).abs()).sum();
    if dist != 1 {
        return Err(Error::usage("boxes must be lattice-adjacent"));
    }
    Ok(())
}

fn demote(field: &mut BoxField, z1: usize, z2: usize, reason: &str) -> PathOutcome {
    field.demotions.push(((z1, z2), reason.to_string()));
    PathOutcome::Demoted { reason: reason.to_string() }
}

/// Per-segment diagnostics of a Gabriel box path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GabrielSegmentReport {
    pub from: usize,
    pub to: usize,
    pub hops: usize,
    pub sq_length_sum: f64,
    pub long_edges: u64,
    pub max_excursion: f64,
}

/// Gabriel path between the reference vertices of two adjacent good boxes:
/// the concatenation of certificate paths between the nearest-to-center
/// points of consecutive sub-boxes along the center segment.
pub fn build_box_path_gabriel(
    points: &PointSet,
    gab: &GeometricGraph,
    field: &mut BoxField,
    z1: usize,
    z2: usize,
) -> Result<(PathOutcome, Vec<GabrielSegmentReport>)> {
    let (m, alpha) = match field.params {
        GoodBoxParams::Gabriel { m, alpha } => (m, alpha),
        _ => return Err(Error::usage("field was not classified with the Gabriel parameters")),
    };
    if z1 == z2 {
        let v = field.reference[z1].ok_or_else(|| Error::usage("box has no reference vertex"))?;
        return Ok((
            PathOutcome::Verified(BoxPath { vertices: vec![v], hops: 0, max_edge_length: 0.0 }),
            Vec::new(),
        ));
    }
    let (z1, z2) = (z1.min(z2), z1.max(z2));
    validate_adjacent_good(field, z1, z2)?;
    let budget = gabriel_path_budget(field.dim, m, alpha, field.box_side);
    let ca = field.box_center(z1);
    let cb = field.box_center(z2);
    let sub = field.box_side / alpha as f64;
    let dim = field.dim;

    // sub-box centers along the segment: alpha + 1 of them, spaced M/alpha
    let mut centers = Vec::with_capacity(alpha as usize + 1);
    for i in 0..=alpha {
        let t = i as f64 / alpha as f64;
        centers.push((0..dim).map(|k| ca[k] + t * (cb[k] - ca[k])).collect::<Vec<f64>>());
    }
    // nearest point to each center within its sub-box
    let mut waypoints = Vec::with_capacity(centers.len());
    for c in &centers {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..points.len() {
            let p = points.point(i);
            if (0..dim).all(|k| (p[k] - c[k]).abs() <= sub / 2.0) {
                let d2 = sq_dist(p, c);
                if best.is_none_or(|(bi, bd)| d2 < bd || (d2 == bd && i < bi)) {
                    best = Some((i, d2));
                }
            }
        }
        match best {
            Some((i, _)) => waypoints.push(i),
            None => {
                return Ok((demote(field, z1, z2, "stabbed sub-box is empty"), Vec::new()));
            }
        }
    }

    let mut reports = Vec::new();
    let mut segments: Vec<GabrielPath> = Vec::new();
    for (i, w) in waypoints.windows(2).enumerate() {
        let path = gabriel_short_path(points, gab, w[0], w[1])?;
        let c = &centers[i];
        let mut max_excursion = 0.0f64;
        for &v in &path.vertices {
            max_excursion = max_excursion.max(sq_dist(points.point(v), c).sqrt());
        }
        let long_edges = path
            .sq_lengths
            .iter()
            .filter(|&&s| s.sqrt() >= budget.long_edge_threshold)
            .count() as u64;
        reports.push(GabrielSegmentReport {
            from: w[0],
            to: w[1],
            hops: path.hops(),
            sq_length_sum: path.sq_length_sum(),
            long_edges,
            max_excursion,
        });
        // per-segment assertions
        if max_excursion > budget.containment_radius * LENGTH_SLACK {
            return Ok((
                demote(field, z1, z2, "segment leaves the containment ball"),
                reports,
            ));
        }
        if path.max_hop_length() > budget.max_edge_length * LENGTH_SLACK {
            return Ok((
                demote(field, z1, z2, "segment edge exceeds the length budget"),
                reports,
            ));
        }
        if path.sq_length_sum() > budget.segment_sq_budget * LENGTH_SLACK {
            return Ok((
                demote(field, z1, z2, "segment squared-length budget exceeded"),
                reports,
            ));
        }
        if long_edges as f64 > budget.max_long_edges_per_segment {
            return Ok((
                demote(field, z1, z2, "too many long edges in a segment"),
                reports,
            ));
        }
        segments.push(path);
    }

    // concatenate and de-duplicate to a simple path
    let mut vertices: Vec<usize> = Vec::new();
    for seg in &segments {
        if vertices.is_empty() {
            vertices.extend_from_slice(&seg.vertices);
        } else {
            vertices.extend_from_slice(&seg.vertices[1..]);
        }
    }
    loop {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut cycle = None;
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
    let hops = vertices.len() - 1;
    if hops as f64 > budget.max_hops {
        return Ok((demote(field, z1, z2, "total hops exceed 2 alpha^d m - 1"), reports));
    }
    let mut max_edge_length = 0.0f64;
    for w in vertices.windows(2) {
        max_edge_length =
            max_edge_length.max(sq_dist(points.point(w[0]), points.point(w[1])).sqrt());
    }
    let path = BoxPath { vertices, hops, max_edge_length };
    field.paths.insert((z1, z2), path.clone());
    Ok((PathOutcome::Verified(path), reports))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoughEmbeddingReport {
    /// Max over verified pairs of the path resistance sum, relative to a
    /// unit lattice-edge resistance.
    pub alpha: f64,
    /// Max over network edges of the number of box-pair paths using it.
    pub beta: u64,
    pub pairs: usize,
}

/// Realized rough-embedding constants of a field's verified paths over a
/// network on the same graph.
pub fn verify_rough_embedding(field: &BoxField, net: &Network) -> Result<RoughEmbeddingReport> {
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, edge) in net.graph.edges.iter().enumerate() {
        edge_index.insert((edge.u, edge.v), e);
    }
    let mut usage: HashMap<usize, u64> = HashMap::new();
    let mut alpha = 0.0f64;
    for path in field.paths.values() {
        let mut sum = 0.0;
        for w in path.vertices.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            let e = edge_index
                .get(&key)
                .ok_or_else(|| Error::usage("path edge missing from the network"))?;
            sum += 1.0 / net.conductance[*e];
            *usage.entry(*e).or_insert(0) += 1;
        }
        alpha = alpha.max(sum);
    }
    let beta = usage.values().copied().max().unwrap_or(0);
    Ok(RoughEmbeddingReport { alpha, beta, pairs: field.paths.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodBoxProbability {
    pub fraction: FractionEstimate,
    pub p_star: f64,
    /// True when the estimate minus two standard errors clears `p_star`.
    pub meets_target: bool,
}

/// Monte-Carlo estimate of the probability that a single box is good under
/// the stationary process.
pub fn estimate_good_box_probability(
    descriptor: &ProcessDescriptor,
    dim: usize,
    m_side: f64,
    params: &GoodBoxParams,
    replicas: u64,
    seed: u64,
    p_star: f64,
) -> Result<GoodBoxProbability> {
    if replicas < 100 {
        return Err(Error::parameter("need at least 100 replicas"));
    }
    descriptor.validate()?;
    let window = Window::new(dim, vec![-m_side / 2.0; dim], vec![m_side; dim], 0.0)?;
    let good: u64 = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let ps = sample(&window, descriptor, substream_seed(seed, k)).expect("validated");
            let field = match params {
                GoodBoxParams::Vs { c4 } => {
                    classify_good_boxes_vs(&ps, &window, m_side, *c4)
                }
                GoodBoxParams::Gabriel { m, alpha } => {
                    classify_good_boxes_gabriel(&ps, &window, m_side, *m, Some(*alpha))
                }
            };
            match field {
                Ok(f) => u64::from(f.num_boxes() == 1 && f.flags[0]),
                Err(_) => 0,
            }
        })
        .sum();
    let fraction = FractionEstimate::new(good, replicas);
    let meets_target = fraction.estimate - 2.0 * fraction.standard_error() >= p_star;
    Ok(GoodBoxProbability { fraction, p_star, meets_target })
}

/// Sample the conditional law of a Poisson process given that two adjacent
/// boxes are Gabriel-good: per sub-box, a Poisson count conditioned to
/// `[1, m]` with uniform placement (the conditional law factorizes over
/// disjoint regions), plus an unconditioned sample on the surrounding
/// collar. Direct rejection sampling of this event has vanishing acceptance
/// probability, so goodness-conditioned geometry can only be studied this
/// way.
pub fn sample_conditioned_gabriel_pair(
    dim: usize,
    intensity: f64,
    m: u64,
    alpha: u64,
    sub_side: f64,
    seed: u64,
) -> Result<(PointSet, BoxField, (usize, usize))> {
    if m < 1 {
        return Err(Error::parameter("occupancy cap m must be at least 1"));
    }
    if alpha.is_multiple_of(2) {
        return Err(Error::parameter("alpha must be odd"));
    }
    if !(sub_side > 0.0) || !(intensity > 0.0) {
        return Err(Error::parameter("sub-box side and intensity must be positive"));
    }
    let m_side = alpha as f64 * sub_side;
    let collar = 3.0 * sub_side;
    // union of B_0 and B_e1 along axis 0
    let lower = vec![-m_side / 2.0; dim];
    let mut sides = vec![m_side; dim];
    sides[0] = 2.0 * m_side;
    let window = Window::new(dim, lower.clone(), sides.clone(), collar)?;

    let nu = intensity * sub_side.powi(dim as i32);
    // acceptance probability of the per-sub-box conditioning
    let accept: f64 = {
        let mut term = (-nu).exp();
        let mut acc = 0.0;
        for k in 1..=m {
            term *= nu / k as f64;
            acc += term;
        }
        acc
    };
    if accept < 1e-3 {
        return Err(Error::parameter(format!(
            "P[1 <= count <= {m}] = {accept:.2e} per sub-box; choose a sub-box \
             side nearer the occupancy-optimal scale"
        )));
    }
    let mut rng = substream_rng(seed, 0);
    let pois = Poisson::new(nu).expect("positive mean");
    let mut coords: Vec<f64> = Vec::new();

    let per_axis: Vec<u64> = (0..dim).map(|k| if k == 0 { 2 * alpha } else { alpha }).collect();
    let total: u64 = per_axis.iter().product();
    for lin in 0..total {
        let mut rem = lin;
        let mut sub_idx = vec![0u64; dim];
        for k in (0..dim).rev() {
            sub_idx[k] = rem % per_axis[k];
            rem /= per_axis[k];
        }
        let count = loop {
            let c = pois.sample(&mut rng) as u64;
            if (1..=m).contains(&c) {
                break c;
            }
        };
        for _ in 0..count {
            for k in 0..dim {
                let lo = lower[k] + sub_idx[k] as f64 * sub_side;
                coords.push(lo + rng.random::<f64>() * sub_side);
            }
        }
    }

    // unconditioned collar: Poisson sample on the extended window, thinned
    // to the complement of the union
    let ext = window.extended();
    let vol = ext.volume();
    let n_collar = Poisson::new(intensity * vol).expect("positive mean").sample(&mut rng) as usize;
    for _ in 0..n_collar {
        let p: Vec<f64> =
            (0..dim).map(|k| ext.lower[k] + rng.random::<f64>() * ext.sides[k]).collect();
        let inside_union = (0..dim).all(|k| p[k] >= lower[k] && p[k] <= lower[k] + sides[k]);
        if !inside_union {
            coords.extend_from_slice(&p);
        }
    }

    let points = PointSet::from_coords(
        window.clone(),
        ProcessDescriptor::Ppp { intensity },
        seed,
        coords,
        None,
    )?;
    let field = classify_good_boxes_gabriel(&points, &window, m_side, m, Some(alpha))?;
    let z1 = field
        .index_of(&vec![0i64; dim])
        .ok_or_else(|| Error::construction("lattice does not contain the first box"))?;
    let mut z2v = vec![0i64; dim];
    z2v[0] = 1;
    let z2 = field
        .index_of(&z2v)
        .ok_or_else(|| Error::construction("lattice does not contain the second box"))?;
    if !field.flags[z1] || !field.flags[z2] {
        return Err(Error::construction(
            "conditioned sample failed goodness classification",
        ));
    }
    Ok((points, field, (z1, z2)))
}
