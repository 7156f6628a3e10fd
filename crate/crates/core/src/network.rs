//! Electrical networks over geometric graphs: conductance assignment,
//! effective resistance via a conjugate-gradient Dirichlet solve, and the
//! series/merge annulus reduction that certifies resistance lower bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometricGraph;

/// Edge conductance as a function of edge length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConductanceModel {
    /// C = 1 on every edge.
    Unit,
    /// C = kappa on every edge.
    Constant { kappa: f64 },
    /// C(r) = exp(-a r), decreasing in edge length.
    ExpDecay { a: f64 },
    /// C(r) = (1 + r)^(-p), decreasing in edge length.
    PowerDecay { p: f64 },
}

impl ConductanceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConductanceModel::Unit => Ok(()),
            ConductanceModel::Constant { kappa } => {
                if kappa > 0.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("constant conductance must be positive"))
                }
            }
            ConductanceModel::ExpDecay { a } => {
                if a > 0.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("exp-decay rate must be positive"))
                }
            }
            ConductanceModel::PowerDecay { p } => {
                if p > 0.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("power-decay exponent must be positive"))
                }
            }
        }
    }

    pub fn conductance(&self, length: f64) -> f64 {
        match *self {
            ConductanceModel::Unit => 1.0,
            ConductanceModel::Constant { kappa } => kappa,
            ConductanceModel::ExpDecay { a } => (-a * length).exp(),
            ConductanceModel::PowerDecay { p } => (1.0 + length).powf(-p),
        }
    }

    /// Supremum of the conductance over all edge lengths.
    pub fn sup_c(&self) -> f64 {
        match *self {
            ConductanceModel::Unit => 1.0,
            ConductanceModel::Constant { kappa } => kappa,
            // decreasing kinds peak at length zero
            ConductanceModel::ExpDecay { .. } | ConductanceModel::PowerDecay { .. } => 1.0,
        }
    }

    pub fn is_decreasing(&self) -> bool {
        matches!(self, ConductanceModel::ExpDecay { .. } | ConductanceModel::PowerDecay { .. })
    }
}

/// A geometric graph with a conductance per edge and the induced vertex
/// weights `w(u) = sum of C(u, v) over neighbors v`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub graph: GeometricGraph,
    pub model: ConductanceModel,
    pub conductance: Vec<f64>,
    pub weight: Vec<f64>,
}

impl Network {
    pub fn sup_c(&self) -> f64 {
        self.model.sup_c()
    }
}

pub fn assign_conductances(graph: GeometricGraph, model: ConductanceModel) -> Result<Network> {
    model.validate()?;
    let mut conductance = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let c = model.conductance(e.length);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::parameter(format!(
                "conductance model yields non-positive value {c} at length {}",
                e.length
            )));
        }
        conductance.push(c);
    }
    let mut weight = vec![0.0; graph.num_vertices()];
    for (e, edge) in graph.edges.iter().enumerate() {
        weight[edge.u] += conductance[e];
        weight[edge.v] += conductance[e];
    }
    Ok(Network { graph, model, conductance, weight })
}

/// Effective resistance between two terminal sets, or `Infinite` when they
/// are disconnected. Disconnection is expected after trimming and is a
/// value, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Resistance {
    Finite(f64),
    Infinite,
}

impl Resistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Resistance::Finite(r) => Some(r),
            Resistance::Infinite => None,
        }
    }
}

/// Solve the Dirichlet problem (potential 1 on `sources`, 0 on `sinks`,
/// harmonic elsewhere) and return 1 / (total current).
///
/// The reduced system is solved with Jacobi-preconditioned conjugate
/// gradients to a relative residual of 1e-10 or better.
pub fn effective_resistance(
    net: &Network,
    sources: &[usize],
    sinks: &[usize],
) -> Result<Resistance> {
    let n = net.graph.num_vertices();
    if sources.is_empty() || sinks.is_empty() {
        return Err(Error::usage("terminal sets must be nonempty"));
    }
    for &v in sources.iter().chain(sinks) {
        if v >= n {
            return Err(Error::usage("terminal vertex out of range"));
        }
        if !net.graph.active[v] {
            return Err(Error::usage("terminal vertex was removed by trimming"));
        }
    }
    let mut role = vec![0u8; n]; // 1 = source, 2 = sink
    for &v in sources {
        role[v] = 1;
    }
    for &v in sinks {
        if role[v] == 1 {
            return Err(Error::usage("terminal sets must be disjoint"));
        }
        role[v] = 2;
    }

    let adj = net.graph.adjacency();

    // reachability from the sources
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = sources.to_vec();
    for &s in sources {
        reach[s] = true;
    }
    let mut hits_sink = false;
    while let Some(v) = stack.pop() {
        for &(w, _) in &adj[v] {
            if !reach[w] {
                reach[w] = true;
                if role[w] == 2 {
                    hits_sink = true;
                }
                stack.push(w);
            }
        }
    }
    if !hits_sink {
        return Ok(Resistance::Infinite);
    }

    // free vertices: reachable, not terminals
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        if reach[v] && role[v] == 0 {
            index[v] = free.len();
            free.push(v);
        }
    }

    // b[i] = sum of C(v, s) over source neighbors s
    let m = free.len();
    let mut b = vec![0.0; m];
    for (i, &v) in free.iter().enumerate() {
        for &(w, e) in &adj[v] {
            if role[w] == 1 {
                b[i] += net.conductance[e];
            }
        }
    }

    let phi_free = if m > 0 {
        let apply = |x: &[f64], out: &mut [f64]| {
            for (i, &v) in free.iter().enumerate() {
                let mut acc = net.weight[v] * x[i];
                for &(w, e) in &adj[v] {
                    if index[w] != usize::MAX {
                        acc -= net.conductance[e] * x[index[w]];
                    }
                }
                out[i] = acc;
            }
        };
        let diag: Vec<f64> = free.iter().map(|&v| net.weight[v]).collect();
        conjugate_gradient(&apply, &diag, &b)?
    } else {
        Vec::new()
    };

    // total current out of the sources
    let mut current = 0.0;
    for &s in sources {
        if !reach[s] {
            continue;
        }
        for &(w, e) in &adj[s] {
            let phi_w = match role[w] {
                1 => 1.0,
                2 => 0.0,
                _ => {
                    if index[w] != usize::MAX {
                        phi_free[index[w]]
                    } else {
                        continue;
                    }
                }
            };
            if role[w] != 1 {
                current += net.conductance[e] * (1.0 - phi_w);
            }
        }
    }
    if !(current > 0.0) || !current.is_finite() {
        return Err(Error::Numeric(format!("non-positive total current {current}")));
    }
    Ok(Resistance::Finite(1.0 / current))
}

/// Jacobi-preconditioned CG for the SPD reduced Laplacian.
fn conjugate_gradient(
    apply: &dyn Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    const MAX_ITERS: usize = 100_000;
    let m = b.len();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let target = 1e-12 * norm_b.max(1.0);

    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];

    for _ in 0..MAX_ITERS {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= target {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Numeric("CG lost positive definiteness".into()));
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }

    // final residual audit against the contract
    apply(&x, &mut ap);
    let res: f64 = ap.iter().zip(b).map(|(a, bi)| (a - bi) * (a - bi)).sum::<f64>().sqrt();
    if res > 1e-10 * norm_b.max(1.0) {
        return Err(Error::Numeric(format!(
            "CG did not reach tolerance: relative residual {:.3e}",
            res / norm_b.max(1.0)
        )));
    }
    Ok(x)
}

/// Annulus index of `x` relative to `center` in the sup norm: the `i` with
/// `i - 1 <= |x - center|_inf < i`.
pub fn annulus_index(x: &[f64], center: &[f64]) -> u32 {
    let mut d = 0.0f64;
    for k in 0..center.len() {
        d = d.max((x[k] - center[k]).abs());
    }
    d.floor() as u32 + 1
}

/// Result of the series/merge reduction: `r[i]` is the effective resistance
/// between merged annuli `i` and `i + 1`, and `total` is their sum — a
/// certified lower bound on the resistance from inside `B_{i0}` to outside
/// `B_{imax}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusBound {
    pub i0: u32,
    pub imax: u32,
    pub r: Vec<f64>,
    pub total: f64,
}

/// Cut/merge reduction: every edge spanning `j` annulus cuts contributes
/// conductance `j * C(e)` to each of the `j` cuts it crosses; annuli are
/// merged into single nodes, so the cuts are in series.
pub fn annulus_reduction_bound(
    net: &Network,
    center: &[f64],
    i0: u32,
    imax: u32,
) -> Result<AnnulusBound> {
    if i0 > imax || i0 == 0 {
        return Err(Error::range("need 1 <= i0 <= imax"));
    }
    let w = &net.graph.window;
    for k in 0..w.dim {
        if center[k] - (imax as f64) < w.lower[k]
            || center[k] + (imax as f64) > w.lower[k] + w.sides[k]
        {
            return Err(Error::range(format!(
                "B_{imax} leaves the analysis window along axis {k}"
            )));
        }
    }
    let mut inv_r = vec![0.0f64; (imax - i0 + 1) as usize];
    for (e, edge) in net.graph.edges.iter().enumerate() {
        let au = annulus_index(net.graph.position(edge.u), center);
        let av = annulus_index(net.graph.position(edge.v), center);
        let (lo, hi) = (au.min(av), au.max(av));
        if lo == hi {
            continue;
        }
        let j = (hi - lo) as f64;
        let start = lo.max(i0);
        let end = hi.min(imax + 1);
        for i in start..end {
            inv_r[(i - i0) as usize] += j * net.conductance[e];
        }
    }
    let r: Vec<f64> = inv_r.iter().map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY }).collect();
    let total = r.iter().sum();
    Ok(AnnulusBound { i0, imax, r, total })
}
