//! Point-process samplers and tail-probability estimators.
//!
//! All samplers are pure functions of `(descriptor, window, seed)`.
//! Interaction-based processes (Matérn cluster / hardcore) sample their
//! parent process in the window dilated by the interaction radius so that
//! thinning and clustering decisions near the window edge see all of their
//! competitors; the returned point set is restricted to the window extended
//! by its geometric buffer.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::rng::{substream_rng, substream_seed};

/// Rectangular sampling window with a geometric buffer collar.
///
/// The buffer is the width of the extended sampling region used to suppress
/// boundary bias in the graphs built downstream; the analysis region is the
/// bare window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub sides: Vec<f64>,
    pub buffer: f64,
}

impl Window {
    pub fn new(dim: usize, lower: Vec<f64>, sides: Vec<f64>, buffer: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::parameter(format!("dimension must be 2 or 3, got {dim}")));
        }
        if lower.len() != dim || sides.len() != dim {
            return Err(Error::parameter("lower/sides arity must match dimension"));
        }
        if sides.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::parameter("all side lengths must be positive"));
        }
        if !(buffer >= 0.0) {
            return Err(Error::parameter("buffer must be nonnegative"));
        }
        Ok(Window { dim, lower, sides, buffer })
    }

    /// Unit-buffer-free convenience: a cube `[0, side]^dim`.
    pub fn cube(dim: usize, side: f64, buffer: f64) -> Result<Self> {
        Window::new(dim, vec![0.0; dim], vec![side; dim], buffer)
    }

    /// The window dilated by `extra` on every face.
    pub fn dilated(&self, extra: f64) -> Window {
        Window {
            dim: self.dim,
            lower: self.lower.iter().map(|l| l - extra).collect(),
            sides: self.sides.iter().map(|s| s + 2.0 * extra).collect(),
            buffer: 0.0,
        }
    }

    /// Window plus buffer collar: the region actually sampled.
    pub fn extended(&self) -> Window {
        self.dilated(self.buffer)
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|k| p[k] >= self.lower[k] && p[k] <= self.lower[k] + self.sides[k])
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.lower[k] + 0.5 * self.sides[k]).collect()
    }
}

/// Which process generated a sample, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessDescriptor {
    Ppp { intensity: f64 },
    MaternCluster {
        parent_intensity: f64,
        daughter_intensity: f64,
        radius: f64,
    },
    MaternHardcore {
        intensity: f64,
        radius: f64,
        variant: HardcoreVariant,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HardcoreVariant {
    I,
    II,
}

impl ProcessDescriptor {
    /// Interaction radius: how far away points can influence local decisions.
    pub fn interaction_radius(&self) -> f64 {
        match self {
            ProcessDescriptor::Ppp { .. } => 0.0,
            ProcessDescriptor::MaternCluster { radius, .. } => *radius,
            ProcessDescriptor::MaternHardcore { radius, .. } => *radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessDescriptor::Ppp { intensity } => {
                if !(intensity > 0.0) {
                    return Err(Error::parameter("PPP intensity must be positive"));
                }
            }
            ProcessDescriptor::MaternCluster { parent_intensity, daughter_intensity, radius } => {
                if !(parent_intensity > 0.0) || !(daughter_intensity > 0.0) {
                    return Err(Error::parameter("cluster intensities must be positive"));
                }
                if !(radius > 0.0) {
                    return Err(Error::parameter("cluster radius must be positive"));
                }
            }
            ProcessDescriptor::MaternHardcore { intensity, radius, .. } => {
                if !(intensity > 0.0) {
                    return Err(Error::parameter("hardcore intensity must be positive"));
                }
                if !(radius > 0.0) {
                    return Err(Error::parameter("hardcore radius must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Mean number of points per unit volume.
    pub fn mean_intensity(&self, dim: usize) -> f64 {
        match *self {
            ProcessDescriptor::Ppp { intensity } => intensity,
            ProcessDescriptor::MaternCluster { parent_intensity, daughter_intensity, radius } => {
                parent_intensity * daughter_intensity * ball_volume(dim, radius)
            }
            // Upper bound; the retained fraction depends on the thinning.
            ProcessDescriptor::MaternHardcore { intensity, .. } => intensity,
        }
    }
}

pub(crate) fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
        _ => unreachable!("dimension restricted to 2 or 3"),
    }
}

/// A finite sample of a point process, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub window: Window,
    pub process: ProcessDescriptor,
    pub seed: u64,
    /// dim-strided coordinates.
    coords: Vec<f64>,
    /// Uniform marks, present for Matérn II samples.
    marks: Option<Vec<f64>>,
}

impl PointSet {
    pub fn from_coords(
        window: Window,
        process: ProcessDescriptor,
        seed: u64,
        coords: Vec<f64>,
        marks: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !coords.len().is_multiple_of(window.dim) {
            return Err(Error::usage("coordinate buffer length not a multiple of dimension"));
        }
        if let Some(m) = &marks {
            if m.len() * window.dim != coords.len() {
                return Err(Error::usage("marks length must match point count"));
            }
        }
        Ok(PointSet { window, process, seed, coords, marks })
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.window.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.window.dim;
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn marks(&self) -> Option<&[f64]> {
        self.marks.as_deref()
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.window.dim)
    }

    /// Index of the sample point nearest to `q` (Euclidean).
    pub fn nearest(&self, q: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        for (i, p) in self.iter_points().enumerate() {
            let d2 = sq_dist(p, q);
            if d2 < best_d2 {
                best_d2 = d2;
                best = Some(i);
            }
        }
        best
    }

    /// Restriction of the sample to a sub-region, keeping provenance.
    ///
    /// For a Poisson sample this is again a Poisson sample of the sub-region.
    pub fn restricted_to(&self, region: &Window) -> PointSet {
        let d = self.dim();
        let mut coords = Vec::new();
        let mut marks = self.marks.as_ref().map(|_| Vec::new());
        for i in 0..self.len() {
            let p = self.point(i);
            if region.extended().contains(p) {
                coords.extend_from_slice(p);
                if let (Some(out), Some(m)) = (&mut marks, &self.marks) {
                    out.push(m[i]);
                }
            }
        }
        debug_assert_eq!(region.dim, d);
        PointSet {
            window: region.clone(),
            process: self.process.clone(),
            seed: self.seed,
            coords,
            marks,
        }
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn poisson_count(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn uniform_in(rng: &mut impl Rng, region: &Window, out: &mut Vec<f64>) {
    for k in 0..region.dim {
        out.push(region.lower[k] + rng.random::<f64>() * region.sides[k]);
    }
}

/// Exact-duplicate removal; keeps first occurrences, preserves order.
/// Sampled coordinates collide with probability zero, but simplicity of the
/// point set is an invariant we enforce rather than assume.
fn dedup_exact(dim: usize, coords: &mut Vec<f64>, marks: &mut Option<Vec<f64>>) {
    let n = coords.len() / dim;
    if n < 2 {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let pa = &coords[a * dim..(a + 1) * dim];
        let pb = &coords[b * dim..(b + 1) * dim];
        pa.partial_cmp(pb).unwrap()
    });
    let mut dup = vec![false; n];
    for w in order.windows(2) {
        let pa = &coords[w[0] * dim..(w[0] + 1) * dim];
        let pb = &coords[w[1] * dim..(w[1] + 1) * dim];
        if pa == pb {
            dup[w[0].max(w[1])] = true;
        }
    }
    if dup.iter().any(|&d| d) {
        let mut new_coords = Vec::with_capacity(coords.len());
        let mut new_marks = marks.as_ref().map(|m| Vec::with_capacity(m.len()));
        for i in 0..n {
            if !dup[i] {
                new_coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                if let (Some(out), Some(m)) = (&mut new_marks, marks.as_ref()) {
                    out.push(m[i]);
                }
            }
        }
        *coords = new_coords;
        *marks = new_marks;
    }
}

/// Homogeneous Poisson point process of the given intensity on
/// `window + buffer`.
pub fn sample_ppp(window: &Window, intensity: f64, seed: u64) -> Result<PointSet> {
    if !(intensity > 0.0) {
        return Err(Error::parameter("PPP intensity must be positive"));
    }
    let ext = window.extended();
    let mut rng = substream_rng(seed, 0);
    let n = poisson_count(&mut rng, intensity * ext.volume());
    let mut coords = Vec::with_capacity(n * window.dim);
    for _ in 0..n {
        uniform_in(&mut rng, &ext, &mut coords);
    }
    let mut marks = None;
    dedup_exact(window.dim, &mut coords, &mut marks);
    PointSet::from_coords(
        window.clone(),
        ProcessDescriptor::Ppp { intensity },
        seed,
        coords,
        None,
    )
}

/// Matérn cluster process: parent PPP(λ) sampled on the window dilated by
/// `radius`, each parent carrying an independent PPP(μ) of daughters in the
/// ball `B(parent, radius)`. Only daughters (never parents) are returned.
pub fn sample_matern_cluster(
    window: &Window,
    parent_intensity: f64,
    daughter_intensity: f64,
    radius: f64,
    seed: u64,
) -> Result<PointSet> {
    let descriptor = ProcessDescriptor::MaternCluster {
        parent_intensity,
        daughter_intensity,
        radius,
    };
    descriptor.validate()?;
    let ext = window.extended();
    let parent_region = ext.dilated(radius);
    let mut rng = substream_rng(seed, 0);
    let n_parents = poisson_count(&mut rng, parent_intensity * parent_region.volume());
    let dim = window.dim;
    let mean_daughters = daughter_intensity * ball_volume(dim, radius);

    let mut coords = Vec::new();
    let mut parent = vec![0.0; dim];
    for _ in 0..n_parents {
        parent.clear();
        uniform_in(&mut rng, &parent_region, &mut parent);
        let k = poisson_count(&mut rng, mean_daughters);
        for _ in 0..k {
            // uniform in the ball by rejection from the bounding cube
            let mut offset = vec![0.0; dim];
            loop {
                let mut norm2 = 0.0;
                for o in offset.iter_mut() {
                    *o = (2.0 * rng.random::<f64>() - 1.0) * radius;
                    norm2 += *o * *o;
                }
                if norm2 <= radius * radius {
                    break;
                }
            }
            let daughter: Vec<f64> = parent.iter().zip(&offset).map(|(p, o)| p + o).collect();
            if ext.contains(&daughter) {
                coords.extend_from_slice(&daughter);
            }
        }
    }
    let mut marks = None;
    dedup_exact(dim, &mut coords, &mut marks);
    PointSet::from_coords(window.clone(), descriptor, seed, coords, None)
}

/// Matérn hardcore process.
///
/// Type I keeps the parent points with no other parent within distance
/// `radius`; type II attaches i.i.d. uniform marks and keeps the points
/// whose mark is strictly smallest in their `radius`-ball. The parent PPP
/// is sampled on the window dilated by `radius` so that thinning decisions
/// near the edge see all competitors.
pub fn sample_matern_hardcore(
    window: &Window,
    intensity: f64,
    radius: f64,
    variant: HardcoreVariant,
    seed: u64,
) -> Result<PointSet> {
    let (_, type_i, type_ii) = sample_matern_hardcore_with_parent(window, intensity, radius, seed)?;
    Ok(match variant {
        HardcoreVariant::I => type_i,
        HardcoreVariant::II => type_ii,
    })
}

/// Both hardcore thinnings together with the marked parent sample they were
/// derived from (restricted to window + buffer). By construction the type I
/// set is contained in the type II set, which is contained in the parent.
pub fn sample_matern_hardcore_with_parent(
    window: &Window,
    intensity: f64,
    radius: f64,
    seed: u64,
) -> Result<(PointSet, PointSet, PointSet)> {
    let descriptor_i =
        ProcessDescriptor::MaternHardcore { intensity, radius, variant: HardcoreVariant::I };
    descriptor_i.validate()?;
    let ext = window.extended();
    let parent_region = ext.dilated(radius);
    let mut rng = substream_rng(seed, 0);
    let n = poisson_count(&mut rng, intensity * parent_region.volume());
    let dim = window.dim;
    let mut parent_coords = Vec::with_capacity(n * dim);
    let mut parent_marks = Vec::with_capacity(n);
    for _ in 0..n {
        uniform_in(&mut rng, &parent_region, &mut parent_coords);
        parent_marks.push(rng.random::<f64>());
    }
    let mut marks_opt = Some(parent_marks);
    dedup_exact(dim, &mut parent_coords, &mut marks_opt);
    let parent_marks = marks_opt.unwrap();
    let n = parent_coords.len() / dim;

    let keep_i = thin_hardcore(dim, &parent_coords, &parent_marks, radius, HardcoreVariant::I);
    let keep_ii = thin_hardcore(dim, &parent_coords, &parent_marks, radius, HardcoreVariant::II);

    let collect = |keep: Option<&[bool]>| -> (Vec<f64>, Vec<f64>) {
        let mut coords = Vec::new();
        let mut marks = Vec::new();
        for i in 0..n {
            let p = &parent_coords[i * dim..(i + 1) * dim];
            if keep.is_none_or(|k| k[i]) && ext.contains(p) {
                coords.extend_from_slice(p);
                marks.push(parent_marks[i]);
            }
        }
        (coords, marks)
    };
    let (pc, pm) = collect(None);
    let (ic, _) = collect(Some(&keep_i));
    let (iic, iim) = collect(Some(&keep_ii));

    let parent = PointSet::from_coords(
        window.clone(),
        ProcessDescriptor::Ppp { intensity },
        seed,
        pc,
        Some(pm),
    )?;
    let type_i = PointSet::from_coords(window.clone(), descriptor_i, seed, ic, None)?;
    let type_ii = PointSet::from_coords(
        window.clone(),
        ProcessDescriptor::MaternHardcore { intensity, radius, variant: HardcoreVariant::II },
        seed,
        iic,
        Some(iim),
    )?;
    Ok((parent, type_i, type_ii))
}

fn thin_hardcore(
    dim: usize,
    coords: &[f64],
    marks: &[f64],
    radius: f64,
    variant: HardcoreVariant,
) -> Vec<bool> {
    let n = coords.len() / dim;
    let grid = UniformGrid::build(dim, coords, radius.max(1e-12));
    let r2 = radius * radius;
    let mut keep = vec![true; n];
    for i in 0..n {
        let p = &coords[i * dim..(i + 1) * dim];
        let mut violated = false;
        grid.for_each_in_ball(p, radius, |j| {
            if j == i || violated {
                return;
            }
            let q = &coords[j * dim..(j + 1) * dim];
            if sq_dist(p, q) <= r2 {
                match variant {
                    HardcoreVariant::I => violated = true,
                    HardcoreVariant::II => {
                        if marks[j] <= marks[i] {
                            violated = true;
                        }
                    }
                }
            }
        });
        keep[i] = !violated;
    }
    keep
}

/// Sample any descriptor on a window.
pub fn sample(window: &Window, descriptor: &ProcessDescriptor, seed: u64) -> Result<PointSet> {
    match *descriptor {
        ProcessDescriptor::Ppp { intensity } => sample_ppp(window, intensity, seed),
        ProcessDescriptor::MaternCluster { parent_intensity, daughter_intensity, radius } => {
            sample_matern_cluster(window, parent_intensity, daughter_intensity, radius, seed)
        }
        ProcessDescriptor::MaternHardcore { intensity, radius, variant } => {
            sample_matern_hardcore(window, intensity, radius, variant, seed)
        }
    }
}

/// Estimate with a 95% Wilson confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub successes: u64,
    pub replicas: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FractionEstimate {
    pub fn new(successes: u64, replicas: u64) -> Self {
        let (lo, hi) = wilson_interval(successes, replicas, 1.959963984540054);
        FractionEstimate {
            successes,
            replicas,
            estimate: successes as f64 / replicas as f64,
            ci_low: lo,
            ci_high: hi,
        }
    }

    pub fn standard_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.replicas as f64).sqrt()
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Void-probability estimate for `[0, L]^d`, with the induced exponential
/// rate `c1_hat = -log(max(p, 1/n)) / L^d` used downstream as the envelope
/// constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoidEstimate {
    pub box_side: f64,
    pub fraction: FractionEstimate,
    pub c1_hat: f64,
}

pub fn empirical_void_probability(
    descriptor: &ProcessDescriptor,
    dim: usize,
    box_side: f64,
    replicas: u64,
    seed: u64,
) -> Result<VoidEstimate> {
    descriptor.validate()?;
    if replicas < 100 {
        return Err(Error::parameter("need at least 100 replicas"));
    }
    if !(box_side > 0.0) {
        return Err(Error::parameter("box side must be positive"));
    }
    let window = Window::cube(dim, box_side, 0.0)?;
    let voids: u64 = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let ps = sample(&window, descriptor, substream_seed(seed, k)).expect("validated");
            let empty = !ps.iter_points().any(|p| window.contains(p));
            u64::from(empty)
        })
        .sum();
    let fraction = FractionEstimate::new(voids, replicas);
    let p_floor = fraction.estimate.max(1.0 / replicas as f64);
    let c1_hat = -p_floor.ln() / box_side.powi(dim as i32);
    Ok(VoidEstimate { box_side, fraction, c1_hat })
}

/// Tail-probability estimate `P[count(region) >= threshold]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailEstimate {
    pub region_sides: Vec<f64>,
    pub threshold: u64,
    pub fraction: FractionEstimate,
}

pub fn empirical_count_tail(
    descriptor: &ProcessDescriptor,
    region_sides: &[f64],
    threshold: u64,
    replicas: u64,
    seed: u64,
) -> Result<TailEstimate> {
    descriptor.validate()?;
    if replicas < 100 {
        return Err(Error::parameter("need at least 100 replicas"));
    }
    let dim = region_sides.len();
    let window = Window::new(dim, vec![0.0; dim], region_sides.to_vec(), 0.0)?;
    let hits: u64 = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let ps = sample(&window, descriptor, substream_seed(seed, k)).expect("validated");
            let count = ps.iter_points().filter(|p| window.contains(p)).count() as u64;
            u64::from(count >= threshold)
        })
        .sum();
    Ok(TailEstimate {
        region_sides: region_sides.to_vec(),
        threshold,
        fraction: FractionEstimate::new(hits, replicas),
    })
}

/// Least-squares fit of `y ~ slope * x + intercept`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LinearFit { slope, intercept, r_squared })
}

/// Estimated deviation constants for the planar count bound:
/// `P[count(L x l) >= c2 * L * l] <= exp(-c3 * L * l)`.
///
/// `c2_hat` is pinned at twice the empirical density (so the threshold is an
/// exponentially rare up-deviation) and `c3_hat` comes from a log-linear
/// regression of the tail estimate across the area grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationConstants {
    pub density: f64,
    pub c2_hat: f64,
    pub c3_hat: f64,
    pub fit: Option<LinearFit>,
    pub tails: Vec<TailEstimate>,
}

pub fn fit_deviation_constants_d2(
    descriptor: &ProcessDescriptor,
    rect_grid: &[(f64, f64)],
    replicas: u64,
    seed: u64,
) -> Result<DeviationConstants> {
    if rect_grid.is_empty() {
        return Err(Error::parameter("need a nonempty (L, l) grid"));
    }
    let density = empirical_density(descriptor, 2, replicas.min(400), seed)?;
    let c2_hat = 2.0 * density;
    let mut areas = Vec::new();
    let mut neglogs = Vec::new();
    let mut tails = Vec::new();
    for (k, &(big_l, small_l)) in rect_grid.iter().enumerate() {
        let area = big_l * small_l;
        let threshold = (c2_hat * area).ceil() as u64;
        let tail = empirical_count_tail(
            descriptor,
            &[big_l, small_l],
            threshold,
            replicas,
            substream_seed(seed, 1000 + k as u64),
        )?;
        let p = tail.fraction.estimate.max(1.0 / replicas as f64);
        areas.push(area);
        neglogs.push(-p.ln());
        tails.push(tail);
    }
    let fit = linear_fit(&areas, &neglogs);
    let c3_hat = fit.map(|f| f.slope).unwrap_or(0.0).max(0.0);
    Ok(DeviationConstants { density, c2_hat, c3_hat, fit, tails })
}

/// Estimated constant for the higher-dimensional count bound
/// `P[count([0,L]^d) >= m] <= exp(c4 * L^d - m)`:
/// the max over the grid of `(log p + m) / L^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountBoundConstant {
    pub c4_hat: f64,
    pub tails: Vec<TailEstimate>,
}

pub fn fit_count_bound_d3(
    descriptor: &ProcessDescriptor,
    box_side: f64,
    m_grid: &[u64],
    replicas: u64,
    seed: u64,
) -> Result<CountBoundConstant> {
    if m_grid.is_empty() {
        return Err(Error::parameter("need a nonempty m grid"));
    }
    let mut c4 = f64::NEG_INFINITY;
    let mut tails = Vec::new();
    let vol = box_side.powi(3);
    for (k, &m) in m_grid.iter().enumerate() {
        let tail = empirical_count_tail(
            descriptor,
            &[box_side, box_side, box_side],
            m,
            replicas,
            substream_seed(seed, 2000 + k as u64),
        )?;
        let p = tail.fraction.estimate.max(1.0 / replicas as f64);
        c4 = c4.max((p.ln() + m as f64) / vol);
        tails.push(tail);
    }
    Ok(CountBoundConstant { c4_hat: c4.max(0.0), tails })
}

/// Empirical mean count per unit volume.
pub fn empirical_density(
    descriptor: &ProcessDescriptor,
    dim: usize,
    replicas: u64,
    seed: u64,
) -> Result<f64> {
    descriptor.validate()?;
    let side = 4.0;
    let window = Window::cube(dim, side, 0.0)?;
    let total: u64 = (0..replicas.max(1))
        .into_par_iter()
        .map(|k| {
            let ps = sample(&window, descriptor, substream_seed(seed, 3_000_000 + k)).unwrap();
            ps.iter_points().filter(|p| window.contains(p)).count() as u64
        })
        .sum();
    Ok(total as f64 / (replicas.max(1) as f64 * side.powi(dim as i32)))
}

/// One near-degenerate tuple found by the general-position scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Degeneracy {
    /// d+1 points within tolerance of a (d-1)-dimensional affine subspace.
    Affine(Vec<usize>),
    /// d+2 points within tolerance of a common sphere.
    Cospherical(Vec<usize>),
}

/// Report of the general-position check. Empty means pass.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub degeneracies: Vec<Degeneracy>,
    /// True when the scan had to fall back to brute force because no
    /// triangulation could be built.
    pub brute_force: bool,
}

impl GeneralPositionReport {
    pub fn pass(&self) -> bool {
        self.degeneracies.is_empty()
    }
}

/// Scan for exact degeneracies: affinely flat (d+1)-tuples and cospherical
/// (d+2)-tuples, decided with exact arithmetic.
///
/// Candidate tuples come from the Delaunay construction (each simplex
/// against the vertices of its neighbors); when the construction itself is
/// impossible or the sample is small, all tuples are scanned.
pub fn check_general_position(points: &PointSet) -> GeneralPositionReport {
    const BRUTE_LIMIT: usize = 48;
    let n = points.len();
    if n <= BRUTE_LIMIT {
        return brute_force_gp_scan(points);
    }
    match crate::geometry::delaunay::Triangulation::build(points) {
        Ok(tri) => {
            let mut report = GeneralPositionReport::default();
            tri.scan_degeneracies(&mut report);
            report
        }
        Err(_) => {
            // Could not triangulate a large sample: report what brute force
            // finds on a prefix rather than giving up entirely.
            brute_force_gp_scan(points)
        }
    }
}

fn brute_force_gp_scan(points: &PointSet) -> GeneralPositionReport {
    use crate::geometry::predicates as pred;
    let d = points.dim();
    let n = points.len().min(64);
    let mut report = GeneralPositionReport { degeneracies: Vec::new(), brute_force: true };
    let p = |i: usize| points.point(i);

    let mut affine_check = |idx: &[usize]| {
        let flat = if d == 2 {
            pred::orient2d(p(idx[0]), p(idx[1]), p(idx[2])) == pred::Sign::Zero
        } else {
            pred::orient3d(p(idx[0]), p(idx[1]), p(idx[2]), p(idx[3])) == pred::Sign::Zero
        };
        if flat {
            report.degeneracies.push(Degeneracy::Affine(idx.to_vec()));
        }
    };
    for_each_tuple(n, d + 1, &mut affine_check);

    let mut sphere_check = |idx: &[usize]| {
        let on_sphere = if d == 2 {
            pred::orient2d(p(idx[0]), p(idx[1]), p(idx[2])) != pred::Sign::Zero
                && pred::incircle2d(p(idx[0]), p(idx[1]), p(idx[2]), p(idx[3])) == pred::Sign::Zero
        } else {
            pred::orient3d(p(idx[0]), p(idx[1]), p(idx[2]), p(idx[3])) != pred::Sign::Zero
                && pred::insphere3d(p(idx[0]), p(idx[1]), p(idx[2]), p(idx[3]), p(idx[4]))
                    == pred::Sign::Zero
        };
        if on_sphere {
            report.degeneracies.push(Degeneracy::Cospherical(idx.to_vec()));
        }
    };
    for_each_tuple(n, d + 2, &mut sphere_check);
    report
}

fn for_each_tuple(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Window {
        Window::cube(2, 1.0, 0.0).unwrap()
    }

    #[test]
    fn ppp_rejects_bad_intensity() {
        assert!(sample_ppp(&unit_square(), 0.0, 1).is_err());
        assert!(sample_ppp(&unit_square(), -1.0, 1).is_err());
    }

    #[test]
    fn ppp_is_deterministic() {
        let a = sample_ppp(&unit_square(), 5.0, 99).unwrap();
        let b = sample_ppp(&unit_square(), 5.0, 99).unwrap();
        assert_eq!(a.coords(), b.coords());
        let c = sample_ppp(&unit_square(), 5.0, 100).unwrap();
        assert!(a.coords() != c.coords() || a.len() != c.len());
    }

    #[test]
    fn ppp_mean_count_matches_intensity() {
        let replicas = 4000;
        let total: usize = (0..replicas)
            .map(|k| sample_ppp(&unit_square(), 2.0, substream_seed(7, k)).unwrap().len())
            .sum();
        let mean = total as f64 / replicas as f64;
        // SE of the mean of Poisson(2) over 4000 replicas is ~0.022
        assert!((mean - 2.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn mcp_near_zero_daughter_intensity_is_almost_always_empty() {
        let mut empties = 0;
        for k in 0..200 {
            let ps =
                sample_matern_cluster(&unit_square(), 1.0, 1e-9, 0.5, substream_seed(11, k))
                    .unwrap();
            empties += usize::from(ps.is_empty());
        }
        assert!(empties >= 199);
    }

    #[test]
    fn mhp_rejects_bad_radius() {
        assert!(
            sample_matern_hardcore(&unit_square(), 1.0, 0.0, HardcoreVariant::I, 1).is_err()
        );
    }

    #[test]
    fn mhp_type_i_respects_hardcore_distance() {
        let window = Window::cube(2, 10.0, 0.0).unwrap();
        let r = 0.4;
        let ps = sample_matern_hardcore(&window, 1.5, r, HardcoreVariant::I, 21).unwrap();
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let d2 = sq_dist(ps.point(i), ps.point(j));
                assert!(d2 > r * r, "hardcore violation at pair ({i},{j})");
            }
        }
    }

    #[test]
    fn hardcore_thinnings_are_nested() {
        let window = Window::cube(2, 8.0, 0.0).unwrap();
        for seed in 0..10u64 {
            let (parent, n1, n2) =
                sample_matern_hardcore_with_parent(&window, 1.0, 0.5, seed).unwrap();
            let as_set = |ps: &PointSet| -> std::collections::BTreeSet<[u64; 2]> {
                ps.iter_points().map(|p| [p[0].to_bits(), p[1].to_bits()]).collect()
            };
            let sp = as_set(&parent);
            let s1 = as_set(&n1);
            let s2 = as_set(&n2);
            assert!(s1.is_subset(&s2), "type I must be a subset of type II (seed {seed})");
            assert!(s2.is_subset(&sp), "type II must be a subset of the parent (seed {seed})");
            // the variant-specific sampler agrees with the coupled one
            let direct =
                sample_matern_hardcore(&window, 1.0, 0.5, HardcoreVariant::I, seed).unwrap();
            assert_eq!(direct.coords(), n1.coords());
        }
    }

    #[test]
    fn mhp_type_ii_with_tiny_radius_keeps_everything() {
        let window = Window::cube(2, 6.0, 0.0).unwrap();
        let seed = 5;
        let parent = sample_ppp(&window, 1.0, seed).unwrap();
        let n2 = sample_matern_hardcore(&window, 1.0, 1e-12, HardcoreVariant::II, seed).unwrap();
        assert_eq!(parent.len(), n2.len());
    }

    #[test]
    fn void_probability_matches_poisson_formula() {
        let est = empirical_void_probability(
            &ProcessDescriptor::Ppp { intensity: 1.0 },
            2,
            1.0,
            20_000,
            31,
        )
        .unwrap();
        let exact = (-1.0f64).exp();
        let se = est.fraction.standard_error();
        assert!(
            (est.fraction.estimate - exact).abs() < 3.0 * se + 1e-12,
            "estimate {} vs exact {exact}",
            est.fraction.estimate
        );
        assert!((est.c1_hat - 1.0).abs() < 0.05);
    }

    #[test]
    fn count_tail_threshold_zero_is_certain() {
        let est = empirical_count_tail(
            &ProcessDescriptor::Ppp { intensity: 1.0 },
            &[1.0, 1.0],
            0,
            200,
            3,
        )
        .unwrap();
        assert_eq!(est.fraction.estimate, 1.0);
    }

    #[test]
    fn disjoint_region_counts_are_uncorrelated_for_ppp() {
        let window = Window::new(2, vec![0.0, 0.0], vec![2.0, 1.0], 0.0).unwrap();
        let n = 2000;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..n {
            let ps = sample_ppp(&window, 1.0, substream_seed(17, k)).unwrap();
            let (mut a, mut b) = (0.0, 0.0);
            for p in ps.iter_points() {
                if p[0] < 1.0 {
                    a += 1.0;
                } else {
                    b += 1.0;
                }
            }
            xs.push(a);
            ys.push(b);
        }
        let fit = linear_fit(&xs, &ys).unwrap();
        let r = fit.r_squared.sqrt();
        assert!(r < 3.0 / (n as f64).sqrt(), "correlation {r}");
    }

    #[test]
    fn general_position_flags_square_corners_and_collinear_triples() {
        let window = unit_square();
        let square = PointSet::from_coords(
            window.clone(),
            ProcessDescriptor::Ppp { intensity: 1.0 },
            0,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            None,
        )
        .unwrap();
        let report = check_general_position(&square);
        assert!(report
            .degeneracies
            .iter()
            .any(|d| matches!(d, Degeneracy::Cospherical(_))));

        let collinear = PointSet::from_coords(
            window,
            ProcessDescriptor::Ppp { intensity: 1.0 },
            0,
            vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0],
            None,
        )
        .unwrap();
        let report = check_general_position(&collinear);
        assert!(report.degeneracies.iter().any(|d| matches!(d, Degeneracy::Affine(_))));
    }

    #[test]
    fn sampled_points_pass_general_position() {
        for seed in 0..100u64 {
            let ps = sample_ppp(&Window::cube(2, 5.0, 0.0).unwrap(), 1.0, seed).unwrap();
            if ps.len() < 4 {
                continue;
            }
            let report = check_general_position(&ps);
            assert!(report.pass(), "degeneracy in continuous sample, seed {seed}");
        }
    }
}
