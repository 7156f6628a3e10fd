//! Incremental Delaunay triangulation in 2 and 3 dimensions.
//!
//! Bowyer–Watson insertion with a point-location walk. The convex hull is
//! closed off with *ghost cells* (one per hull facet, sharing a symbolic
//! vertex at infinity), which lets hull growth reuse the ordinary cavity
//! machinery. All orientation / in-sphere decisions go through the exact
//! predicates of [`super::predicates`], so the empty-circumsphere property
//! holds exactly; points exactly on a circumsphere are treated as outside
//! (index-based symbolic perturbation), which keeps degenerate inputs such
//! as cocircular quadruples triangulable.

use std::collections::HashMap;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::point_process::PointSet;

use super::predicates::{self as pred, Sign};

/// Symbolic vertex at infinity.
pub const GHOST: usize = usize::MAX;

/// Sentinel for "no neighboring simplex" (hull facet) in the finalized
/// triangulation.
pub const HULL: usize = usize::MAX;

pub(crate) trait Kernel<const D: usize, const DP1: usize> {
    fn orient(s: &[[f64; D]; DP1]) -> Sign;
    fn insphere(s: &[[f64; D]; DP1], p: &[f64; D]) -> Sign;
    /// Conflict rule for a point exactly on the supporting plane of a hull
    /// facet: inside the facet's circumscribed (d-1)-sphere?
    fn degenerate_facet_conflict(f: &[[f64; D]; D], p: &[f64; D]) -> bool;
}

pub(crate) struct K2;
pub(crate) struct K3;

impl Kernel<2, 3> for K2 {
    fn orient(s: &[[f64; 2]; 3]) -> Sign {
        pred::orient2d(&s[0], &s[1], &s[2])
    }
    fn insphere(s: &[[f64; 2]; 3], p: &[f64; 2]) -> Sign {
        pred::incircle2d(&s[0], &s[1], &s[2], p)
    }
    fn degenerate_facet_conflict(f: &[[f64; 2]; 2], p: &[f64; 2]) -> bool {
        pred::segment_interior_contains(&f[0], &f[1], p)
    }
}

impl Kernel<3, 4> for K3 {
    fn orient(s: &[[f64; 3]; 4]) -> Sign {
        pred::orient3d(&s[0], &s[1], &s[2], &s[3])
    }
    fn insphere(s: &[[f64; 3]; 4], p: &[f64; 3]) -> Sign {
        pred::insphere3d(&s[0], &s[1], &s[2], &s[3], p)
    }
    fn degenerate_facet_conflict(f: &[[f64; 3]; 3], p: &[f64; 3]) -> bool {
        pred::facet_circumdisc_contains(&f[0], &f[1], &f[2], p)
    }
}

#[derive(Clone, Copy)]
struct Cell<const DP1: usize> {
    verts: [usize; DP1],
    neigh: [usize; DP1],
}

struct TriMesh<const D: usize, const DP1: usize, K> {
    points: Vec<[f64; D]>,
    cells: Vec<Cell<DP1>>,
    alive: Vec<bool>,
    free: Vec<usize>,
    /// per-cell conflict cache: (epoch, conflicting)
    tested: Vec<(u64, bool)>,
    epoch: u64,
    hint: usize,
    _k: PhantomData<K>,
}

impl<const D: usize, const DP1: usize, K: Kernel<D, DP1>> TriMesh<D, DP1, K> {
    fn is_ghost(&self, c: usize) -> bool {
        self.cells[c].verts.contains(&GHOST)
    }

    fn ghost_slot(&self, c: usize) -> usize {
        self.cells[c].verts.iter().position(|&v| v == GHOST).expect("ghost cell")
    }

    fn gather(&self, verts: &[usize; DP1]) -> [[f64; D]; DP1] {
        std::array::from_fn(|i| self.points[verts[i]])
    }

    fn facet_points(&self, c: usize, skip_slot: usize) -> [[f64; D]; D] {
        let verts = &self.cells[c].verts;
        let mut out = [[0.0; D]; D];
        let mut k = 0;
        for (i, &v) in verts.iter().enumerate() {
            if i != skip_slot {
                out[k] = self.points[v];
                k += 1;
            }
        }
        out
    }

    fn new_cell(&mut self, verts: [usize; DP1]) -> usize {
        let cell = Cell { verts, neigh: [usize::MAX; DP1] };
        if let Some(id) = self.free.pop() {
            self.cells[id] = cell;
            self.alive[id] = true;
            self.tested[id] = (0, false);
            id
        } else {
            self.cells.push(cell);
            self.alive.push(true);
            self.tested.push((0, false));
            self.cells.len() - 1
        }
    }

    fn kill(&mut self, c: usize) {
        self.alive[c] = false;
        self.free.push(c);
    }

    /// Conflict test with the current insertion point.
    fn conflicts(&mut self, c: usize, p: &[f64; D]) -> bool {
        if self.tested[c].0 == self.epoch {
            return self.tested[c].1;
        }
        let result = if self.is_ghost(c) {
            let g = self.ghost_slot(c);
            let f = self.facet_points(c, g);
            let fp: [[f64; D]; DP1] = std::array::from_fn(|i| if i < D { f[i] } else { *p });
            match K::orient(&fp) {
                Sign::Positive => true,
                Sign::Zero => K::degenerate_facet_conflict(&f, p),
                Sign::Negative => false,
            }
        } else {
            let s = self.gather(&self.cells[c].verts);
            K::insphere(&s, p) == Sign::Positive
        };
        self.tested[c] = (self.epoch, result);
        result
    }

    /// Orientation of cell `c` with the vertex in `slot` replaced by `p`.
    fn orient_replaced(&self, c: usize, slot: usize, p: &[f64; D]) -> Sign {
        let verts = &self.cells[c].verts;
        let s: [[f64; D]; DP1] =
            std::array::from_fn(|i| if i == slot { *p } else { self.points[verts[i]] });
        K::orient(&s)
    }

    fn any_alive(&self) -> usize {
        if self.alive.get(self.hint).copied().unwrap_or(false) {
            return self.hint;
        }
        (0..self.cells.len()).rev().find(|&c| self.alive[c]).expect("nonempty mesh")
    }

    /// Find one cell in conflict with `p`. Errors on an exact duplicate.
    fn locate(&mut self, p: &[f64; D]) -> Result<usize> {
        let mut c = self.any_alive();
        if self.is_ghost(c) {
            if self.conflicts(c, p) {
                return Ok(c);
            }
            c = self.cells[c].neigh[self.ghost_slot(c)];
        }
        let cap = 8 * (self.cells.len() + 64);
        let mut rot = 0usize;
        for _ in 0..cap {
            debug_assert!(!self.is_ghost(c));
            let verts = self.cells[c].verts;
            for &v in &verts {
                if self.points[v] == *p {
                    return Err(Error::usage("duplicate point in triangulation input"));
                }
            }
            let mut stepped = false;
            for k in 0..DP1 {
                let slot = (k + rot) % DP1;
                if self.orient_replaced(c, slot, p) == Sign::Negative {
                    let next = self.cells[c].neigh[slot];
                    if self.is_ghost(next) {
                        // p is strictly beyond this hull facet
                        return Ok(next);
                    }
                    c = next;
                    stepped = true;
                    break;
                }
            }
            if !stepped {
                // p lies in the closed cell; a non-vertex interior point is
                // strictly inside the circumsphere
                return Ok(c);
            }
            rot = rot.wrapping_add(1);
        }
        // Safety net for walk pathologies: exhaustive scan.
        for c in 0..self.cells.len() {
            if self.alive[c] && self.conflicts(c, p) {
                return Ok(c);
            }
        }
        Err(Error::construction("point location failed"))
    }

    /// Orientation probe to fix the outward order of a new hull facet:
    /// the facet must see every mesh point on its non-positive side.
    fn orient_hull_facet(&self, facet: &mut [usize; D], probes: &[usize]) -> Result<()> {
        let fp: [[f64; D]; D] = std::array::from_fn(|i| self.points[facet[i]]);
        let test = |q: usize, fp: &[[f64; D]; D]| -> Sign {
            let s: [[f64; D]; DP1] =
                std::array::from_fn(|i| if i < D { fp[i] } else { self.points[q] });
            K::orient(&s)
        };
        for &q in probes {
            if q == GHOST || facet.contains(&q) {
                continue;
            }
            match test(q, &fp) {
                Sign::Negative => return Ok(()),
                Sign::Positive => {
                    facet.swap(0, 1);
                    return Ok(());
                }
                Sign::Zero => continue,
            }
        }
        // Extremely degenerate neighborhood: scan all vertices.
        for q in 0..self.points.len() {
            if facet.contains(&q) {
                continue;
            }
            match test(q, &fp) {
                Sign::Negative => return Ok(()),
                Sign::Positive => {
                    facet.swap(0, 1);
                    return Ok(());
                }
                Sign::Zero => continue,
            }
        }
        Err(Error::construction("cannot orient hull facet: flat point set"))
    }

    fn insert(&mut self, pid: usize) -> Result<()> {
        let p = self.points[pid];
        self.epoch += 1;
        let start = self.locate(&p)?;
        if !self.conflicts(start, &p) {
            return Err(Error::construction("located cell does not conflict"));
        }

        // Flood the conflict cavity.
        let mut cavity = vec![start];
        let mut stack = vec![start];
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        while let Some(c) = stack.pop() {
            for slot in 0..DP1 {
                let n = self.cells[c].neigh[slot];
                let fresh = self.tested[n].0 != self.epoch;
                if self.conflicts(n, &p) {
                    if fresh {
                        cavity.push(n);
                        stack.push(n);
                    }
                } else {
                    boundary.push((c, slot));
                }
            }
        }

        // Build one new cell per boundary facet.
        let mut pending: HashMap<[usize; DP1], (usize, usize)> = HashMap::new();
        let mut created = Vec::with_capacity(boundary.len());
        for &(dying, slot) in &boundary {
            let outside = self.cells[dying].neigh[slot];
            let mut facet: Vec<usize> = Vec::with_capacity(D);
            for (i, &v) in self.cells[dying].verts.iter().enumerate() {
                if i != slot {
                    facet.push(v);
                }
            }
            let new_id = if facet.contains(&GHOST) {
                // New hull facet: ridge + p, still a ghost cell.
                let mut real: [usize; D] = [0; D];
                let mut k = 0;
                for &v in &facet {
                    if v != GHOST {
                        real[k] = v;
                        k += 1;
                    }
                }
                real[D - 1] = pid;
                // probe with the vertex removed from the dying ghost and the
                // outside cell's vertices
                let mut probes: Vec<usize> = vec![self.cells[dying].verts[slot]];
                probes.extend_from_slice(&self.cells[outside].verts);
                self.orient_hull_facet(&mut real, &probes)?;
                let verts: [usize; DP1] =
                    std::array::from_fn(|i| if i < D { real[i] } else { GHOST });
                self.new_cell(verts)
            } else {
                let mut verts: [usize; DP1] =
                    std::array::from_fn(|i| if i < D { facet[i] } else { pid });
                let s = self.gather(&verts);
                match K::orient(&s) {
                    Sign::Positive => {}
                    Sign::Negative => verts.swap(0, 1),
                    Sign::Zero => {
                        return Err(Error::construction(
                            "degenerate cavity facet during insertion",
                        ))
                    }
                }
                self.new_cell(verts)
            };

            // The base facet (shared with the surviving outside cell) is the
            // new cell minus the inserted vertex.
            let base_slot = self.cells[new_id]
                .verts
                .iter()
                .position(|&v| v == pid)
                .expect("new cell contains the inserted vertex");
            self.cells[new_id].neigh[base_slot] = outside;
            let back = self.cells[outside]
                .neigh
                .iter()
                .position(|&n| n == dying)
                .expect("outside cell must border the cavity");
            self.cells[outside].neigh[back] = new_id;

            // Register the remaining facets for sibling gluing.
            for slot in 0..DP1 {
                if slot == base_slot {
                    continue;
                }
                let mut key = [usize::MAX; DP1];
                let mut k = 0;
                for (i, &v) in self.cells[new_id].verts.iter().enumerate() {
                    if i != slot {
                        key[k] = v;
                        k += 1;
                    }
                }
                key[..D].sort_unstable();
                if let Some((other, other_slot)) = pending.remove(&key) {
                    self.cells[new_id].neigh[slot] = other;
                    self.cells[other].neigh[other_slot] = new_id;
                } else {
                    pending.insert(key, (new_id, slot));
                }
            }
            created.push(new_id);
        }
        if !pending.is_empty() {
            return Err(Error::construction("unmatched facets after insertion"));
        }
        for c in cavity {
            self.kill(c);
        }
        self.hint = *created.last().expect("cavity has a boundary");
        Ok(())
    }

    fn build(points: Vec<[f64; D]>, order: &[usize]) -> Result<Self> {
        let mut mesh = TriMesh::<D, DP1, K> {
            points,
            cells: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            tested: Vec::new(),
            epoch: 0,
            hint: 0,
            _k: PhantomData,
        };
        let seed = mesh.find_seed(order)?;

        // Seed simplex, positively oriented.
        let mut verts: [usize; DP1] = std::array::from_fn(|i| seed[i]);
        let s = mesh.gather(&verts);
        if K::orient(&s) == Sign::Negative {
            verts.swap(0, 1);
        }
        let real = mesh.new_cell(verts);
        // One ghost per facet, glued to the seed and to each other.
        let mut ghosts = [0usize; DP1];
        for slot in 0..DP1 {
            let mut facet: [usize; D] = [0; D];
            let mut k = 0;
            for (i, &v) in mesh.cells[real].verts.iter().enumerate() {
                if i != slot {
                    facet[k] = v;
                    k += 1;
                }
            }
            let probe = [mesh.cells[real].verts[slot]];
            mesh.orient_hull_facet(&mut facet, &probe)?;
            let gverts: [usize; DP1] =
                std::array::from_fn(|i| if i < D { facet[i] } else { GHOST });
            let g = mesh.new_cell(gverts);
            ghosts[slot] = g;
            mesh.cells[real].neigh[slot] = g;
            let gslot = mesh.ghost_slot(g);
            mesh.cells[g].neigh[gslot] = real;
        }
        // Ghost-to-ghost adjacency: ghosts of facets sharing a ridge.
        for a in 0..DP1 {
            for b in (a + 1)..DP1 {
                let ga = ghosts[a];
                let gb = ghosts[b];
                // the facet of ga that excludes the real vertex shared with
                // the removed vertex of b (and vice versa)
                let vb = mesh.cells[real].verts[b];
                let va = mesh.cells[real].verts[a];
                let sa = mesh.cells[ga]
                    .verts
                    .iter()
                    .position(|&v| v == vb)
                    .expect("ghost shares seed facet");
                let sb = mesh.cells[gb]
                    .verts
                    .iter()
                    .position(|&v| v == va)
                    .expect("ghost shares seed facet");
                mesh.cells[ga].neigh[sa] = gb;
                mesh.cells[gb].neigh[sb] = ga;
            }
        }

        for &pid in order {
            if seed.contains(&pid) {
                continue;
            }
            mesh.insert(pid)?;
        }
        Ok(mesh)
    }

    /// First d+1 affinely independent points in insertion order.
    fn find_seed(&self, order: &[usize]) -> Result<[usize; DP1]> {
        let mut seed: Vec<usize> = Vec::with_capacity(DP1);
        for &i in order {
            let cand = self.points[i];
            let independent = match seed.len() {
                0 => true,
                1 => self.points[seed[0]] != cand,
                2 => {
                    if D == 2 {
                        orient2d_of(&self.points[seed[0]], &self.points[seed[1]], &cand)
                            != Sign::Zero
                    } else {
                        !collinear3(&self.points[seed[0]], &self.points[seed[1]], &cand)
                    }
                }
                3 => {
                    let s: [[f64; D]; DP1] = std::array::from_fn(|k| {
                        if k < 3 {
                            self.points[seed[k]]
                        } else {
                            cand
                        }
                    });
                    K::orient(&s) != Sign::Zero
                }
                _ => false,
            };
            if independent {
                seed.push(i);
                if seed.len() == DP1 {
                    return Ok(std::array::from_fn(|k| seed[k]));
                }
            }
        }
        Err(Error::construction(
            "all points affinely degenerate: no full-dimensional simplex exists",
        ))
    }
}

fn orient2d_of<const D: usize>(a: &[f64; D], b: &[f64; D], c: &[f64; D]) -> Sign {
    pred::orient2d(&a[..2], &b[..2], &c[..2])
}

fn collinear3<const D: usize>(a: &[f64; D], b: &[f64; D], c: &[f64; D]) -> bool {
    // collinear in space iff every axis-plane projection is collinear
    let proj = |p: &[f64; D], i: usize, j: usize| [p[i], p[j]];
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if pred::orient2d(&proj(a, i, j), &proj(b, i, j), &proj(c, i, j)) != Sign::Zero {
            return false;
        }
    }
    true
}

/// A finalized Delaunay triangulation: simplices over the sample points,
/// facet adjacency, circumcenters and circumradii.
#[derive(Debug, Clone)]
pub struct Triangulation {
    dim: usize,
    n_points: usize,
    coords: Vec<f64>,
    /// (dim+1)-strided vertex ids of the simplices.
    cells: Vec<usize>,
    /// (dim+1)-strided; `neighbors[c * (dim+1) + s]` is the simplex across
    /// the facet opposite vertex slot `s`, or [`HULL`].
    neighbors: Vec<usize>,
    circumcenters: Vec<f64>,
    circumradii: Vec<f64>,
}

impl Triangulation {
    /// Delaunay triangulation of all points (window plus buffer collar).
    pub fn build(points: &PointSet) -> Result<Triangulation> {
        let dim = points.dim();
        let n = points.len();
        if n < dim + 1 {
            return Err(Error::construction(format!(
                "need at least {} points in dimension {dim}, got {n}",
                dim + 1
            )));
        }
        for p in points.iter_points() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::usage("non-finite coordinate"));
            }
        }
        check_simple(points)?;
        let order = morton_order(points);
        match dim {
            2 => {
                let pts: Vec<[f64; 2]> =
                    points.iter_points().map(|p| [p[0], p[1]]).collect();
                let mesh = TriMesh::<2, 3, K2>::build(pts, &order)?;
                Ok(finalize::<2, 3, K2>(mesh, n))
            }
            3 => {
                let pts: Vec<[f64; 3]> =
                    points.iter_points().map(|p| [p[0], p[1], p[2]]).collect();
                let mesh = TriMesh::<3, 4, K3>::build(pts, &order)?;
                Ok(finalize::<3, 4, K3>(mesh, n))
            }
            _ => Err(Error::parameter("dimension must be 2 or 3")),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.n_points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cell_neighbors(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.neighbors[c * k..(c + 1) * k]
    }

    pub fn circumcenter(&self, c: usize) -> &[f64] {
        &self.circumcenters[c * self.dim..(c + 1) * self.dim]
    }

    pub fn circumradius(&self, c: usize) -> f64 {
        self.circumradii[c]
    }

    /// Unique undirected edges (vertex-index pairs, u < v, sorted).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let k = self.dim + 1;
        let mut edges = Vec::with_capacity(self.num_cells() * k);
        for c in 0..self.num_cells() {
            let vs = self.cell(c);
            for i in 0..k {
                for j in (i + 1)..k {
                    let (a, b) = (vs[i].min(vs[j]), vs[i].max(vs[j]));
                    edges.push((a, b));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Simplices incident to each vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_points];
        for c in 0..self.num_cells() {
            for &v in self.cell(c) {
                out[v].push(c);
            }
        }
        out
    }

    /// Exact empty-circumsphere audit against every point; O(cells * n).
    pub fn verify_empty_circumspheres(&self) -> bool {
        let n = self.num_points();
        for c in 0..self.num_cells() {
            let vs = self.cell(c);
            for q in 0..n {
                if vs.contains(&q) {
                    continue;
                }
                let inside = match self.dim {
                    2 => {
                        let s = self.oriented_cell_points::<2, 3>(c);
                        pred::incircle2d(&s[0], &s[1], &s[2], self.point(q))
                    }
                    _ => {
                        let s = self.oriented_cell_points::<3, 4>(c);
                        pred::insphere3d(&s[0], &s[1], &s[2], &s[3], self.point(q))
                    }
                };
                if inside == Sign::Positive {
                    return false;
                }
            }
        }
        true
    }

    fn oriented_cell_points<const D: usize, const DP1: usize>(&self, c: usize) -> [[f64; D]; DP1] {
        let vs = self.cell(c);
        let mut s: [[f64; D]; DP1] = std::array::from_fn(|i| {
            let p = self.point(vs[i]);
            std::array::from_fn(|k| p[k])
        });
        let views: Vec<&[f64]> = s.iter().map(|p| &p[..]).collect();
        let ori = if D == 2 {
            pred::orient2d(views[0], views[1], views[2])
        } else {
            pred::orient3d(views[0], views[1], views[2], views[3])
        };
        if ori == Sign::Negative {
            s.swap(0, 1);
        }
        s
    }

    /// Collect exact degeneracies witnessed by the triangulation: simplices
    /// whose circumsphere passes through a neighboring vertex, and flat
    /// (d+1)-tuples among facet vertices and their opposite vertices.
    pub fn scan_degeneracies(&self, report: &mut crate::point_process::GeneralPositionReport) {
        use crate::point_process::Degeneracy;
        use std::collections::BTreeSet;
        let k = self.dim + 1;
        let mut cospherical: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut affine: BTreeSet<Vec<usize>> = BTreeSet::new();
        for c in 0..self.num_cells() {
            let vs = self.cell(c);
            for s in 0..k {
                let n = self.cell_neighbors(c)[s];
                if n == HULL {
                    continue;
                }
                let nvs = self.cell(n);
                let backslot = self.cell_neighbors(n).iter().position(|&x| x == c);
                let opposite = match backslot {
                    Some(b) => nvs[b],
                    None => continue,
                };
                let on_sphere = match self.dim {
                    2 => {
                        let sp = self.oriented_cell_points::<2, 3>(c);
                        pred::incircle2d(&sp[0], &sp[1], &sp[2], self.point(opposite))
                    }
                    _ => {
                        let sp = self.oriented_cell_points::<3, 4>(c);
                        pred::insphere3d(&sp[0], &sp[1], &sp[2], &sp[3], self.point(opposite))
                    }
                };
                if on_sphere == Sign::Zero {
                    let mut tuple: Vec<usize> = vs.to_vec();
                    tuple.push(opposite);
                    tuple.sort_unstable();
                    cospherical.insert(tuple);
                }
                // flat tuple: facet (cell minus slot s) plus the opposite vertex
                let mut tuple: Vec<usize> =
                    vs.iter().enumerate().filter(|&(i, _)| i != s).map(|(_, &v)| v).collect();
                tuple.push(opposite);
                let flat = match self.dim {
                    2 => {
                        pred::orient2d(
                            self.point(tuple[0]),
                            self.point(tuple[1]),
                            self.point(tuple[2]),
                        ) == Sign::Zero
                    }
                    _ => {
                        pred::orient3d(
                            self.point(tuple[0]),
                            self.point(tuple[1]),
                            self.point(tuple[2]),
                            self.point(tuple[3]),
                        ) == Sign::Zero
                    }
                };
                if flat {
                    tuple.sort_unstable();
                    affine.insert(tuple);
                }
            }
        }
        for t in affine {
            report.degeneracies.push(Degeneracy::Affine(t));
        }
        for t in cospherical {
            report.degeneracies.push(Degeneracy::Cospherical(t));
        }
    }
}

fn check_simple(points: &PointSet) -> Result<()> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points.point(a).partial_cmp(points.point(b)).unwrap());
    for w in order.windows(2) {
        if points.point(w[0]) == points.point(w[1]) {
            return Err(Error::usage(format!(
                "duplicate points at indices {} and {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Insertion order along a Morton (z-order) curve for walk locality.
fn morton_order(points: &PointSet) -> Vec<usize> {
    let dim = points.dim();
    let n = points.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points.iter_points() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let bits = if dim == 2 { 31 } else { 21 };
    let scale: Vec<f64> = (0..dim)
        .map(|k| {
            let span = (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
            (((1u64 << bits) - 1) as f64) / span
        })
        .collect();
    let mut keyed: Vec<(u64, usize)> = (0..n)
        .map(|i| {
            let p = points.point(i);
            let q: Vec<u64> =
                (0..dim).map(|k| ((p[k] - lo[k]) * scale[k]) as u64).collect();
            (interleave(&q, bits), i)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn interleave(q: &[u64], bits: u32) -> u64 {
    let d = q.len() as u32;
    let mut out = 0u64;
    for b in 0..bits {
        for (k, &v) in q.iter().enumerate() {
            out |= ((v >> b) & 1) << (b * d + k as u32);
        }
    }
    out
}

fn finalize<const D: usize, const DP1: usize, K: Kernel<D, DP1>>(
    mesh: TriMesh<D, DP1, K>,
    n_points: usize,
) -> Triangulation {
    let mut remap = vec![usize::MAX; mesh.cells.len()];
    let mut real_ids = Vec::new();
    for c in 0..mesh.cells.len() {
        if mesh.alive[c] && !mesh.cells[c].verts.contains(&GHOST) {
            remap[c] = real_ids.len();
            real_ids.push(c);
        }
    }
    let mut cells = Vec::with_capacity(real_ids.len() * DP1);
    let mut neighbors = Vec::with_capacity(real_ids.len() * DP1);
    let mut circumcenters = Vec::with_capacity(real_ids.len() * D);
    let mut circumradii = Vec::with_capacity(real_ids.len());
    for &c in &real_ids {
        let cell = &mesh.cells[c];
        cells.extend_from_slice(&cell.verts);
        for &n in &cell.neigh {
            neighbors.push(if n != usize::MAX && remap[n] != usize::MAX {
                remap[n]
            } else {
                HULL
            });
        }
        let pts: Vec<[f64; D]> = cell.verts.iter().map(|&v| mesh.points[v]).collect();
        let (center, radius) = circumsphere::<D>(&pts);
        circumcenters.extend_from_slice(&center);
        circumradii.push(radius);
    }
    let mut coords = Vec::with_capacity(n_points * D);
    for p in &mesh.points {
        coords.extend_from_slice(p);
    }
    Triangulation {
        dim: D,
        n_points,
        coords,
        cells,
        neighbors,
        circumcenters,
        circumradii,
    }
}

/// Circumcenter and circumradius of a d-simplex, in coordinates relative to
/// the first vertex for stability.
pub(crate) fn circumsphere<const D: usize>(pts: &[[f64; D]]) -> ([f64; D], f64) {
    let a = &pts[0][..];
    if D == 2 {
        let b = &pts[1][..];
        let c = &pts[2][..];
        let bx = b[0] - a[0];
        let by = b[1] - a[1];
        let cx = c[0] - a[0];
        let cy = c[1] - a[1];
        let det = 2.0 * (bx * cy - by * cx);
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let u = [(cy * b2 - by * c2) / det, (bx * c2 - cx * b2) / det];
        let center: [f64; D] = std::array::from_fn(|k| a[k] + u[k]);
        (center, (u[0] * u[0] + u[1] * u[1]).sqrt())
    } else {
        let row = |i: usize| -> [f64; 3] {
            let p = &pts[i][..];
            [p[0] - a[0], p[1] - a[1], p[2] - a[2]]
        };
        let m = [row(1), row(2), row(3)];
        let rhs: Vec<f64> =
            m.iter().map(|v| 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).collect();
        let det3 = |m: &[[f64; 3]; 3]| -> f64 {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let det = det3(&m);
        let mut u = [0.0f64; 3];
        for k in 0..3 {
            let mut mk = m;
            for i in 0..3 {
                mk[i][k] = rhs[i];
            }
            u[k] = det3(&mk) / det;
        }
        let center: [f64; D] = std::array::from_fn(|k| a[k] + u[k]);
        let r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        (center, r2.sqrt())
    }
}
