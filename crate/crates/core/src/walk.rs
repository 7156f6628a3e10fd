//! The random walk associated with a conductance network: neighbor sampling
//! by alias tables, escape-probability estimation and recurrence profiles.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{annulus_index, effective_resistance, Network, Resistance};
use crate::point_process::FractionEstimate;
use crate::rng::substream_rng;

/// Walker/Vose alias table for O(1) categorical sampling.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> AliasTable {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias = vec![0usize; n];
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] = (prob[l] + prob[s]) - 1.0;
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &i in small.iter().chain(large.iter()) {
            prob[i] = 1.0;
            alias[i] = i;
        }
        AliasTable { prob, alias }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let n = self.prob.len();
        let i = rng.random_range(0..n);
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Shared, lazily built per-vertex alias tables over a network.
/// Table contents depend only on the vertex, so concurrent replicas see the
/// same distribution regardless of build order.
pub struct WalkSampler<'a> {
    pub net: &'a Network,
    adj: Vec<Vec<(usize, usize)>>,
    tables: Vec<OnceLock<AliasTable>>,
}

impl<'a> WalkSampler<'a> {
    pub fn new(net: &'a Network) -> WalkSampler<'a> {
        let adj = net.graph.adjacency();
        let tables = (0..net.graph.num_vertices()).map(|_| OnceLock::new()).collect();
        WalkSampler { net, adj, tables }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Transition distribution at `u`: pairs (neighbor, C(u, v) / w(u)).
    pub fn transition_probabilities(&self, u: usize) -> Vec<(usize, f64)> {
        self.adj[u]
            .iter()
            .map(|&(v, e)| (v, self.net.conductance[e] / self.net.weight[u]))
            .collect()
    }

    fn table(&self, u: usize) -> &AliasTable {
        self.tables[u].get_or_init(|| {
            let ws: Vec<f64> = self.adj[u].iter().map(|&(_, e)| self.net.conductance[e]).collect();
            AliasTable::new(&ws)
        })
    }

    pub fn step(&self, u: usize, rng: &mut ChaCha8Rng) -> usize {
        let k = self.table(u).sample(rng);
        self.adj[u][k].0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum StopRule {
    MaxSteps(u64),
    /// Stop when the walk leaves `B_n` (sup-norm ball of radius `n` around
    /// `center`) or returns to the start, whichever comes first.
    ExitBall { center: Vec<f64>, n: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkSummary {
    pub start: usize,
    pub steps: u64,
    pub returns: u64,
    /// Largest annulus index visited (relative to the stop-rule center when
    /// present, otherwise to the start position).
    pub exit_index: u32,
    pub escaped: bool,
    pub seed: u64,
}

/// Run one walk. Each step moves to neighbor `v` with probability
/// `C(u, v) / w(u)`; the trajectory is a pure function of the seed.
pub fn simulate_walk(
    sampler: &WalkSampler,
    start: usize,
    stop: &StopRule,
    seed: u64,
) -> Result<WalkSummary> {
    let net = sampler.net;
    if start >= net.graph.num_vertices() || !net.graph.active[start] {
        return Err(Error::usage("start vertex missing from the trimmed region"));
    }
    if sampler.degree(start) == 0 {
        return Err(Error::usage("start vertex is isolated"));
    }
    let center: Vec<f64> = match stop {
        StopRule::ExitBall { center, .. } => center.clone(),
        StopRule::MaxSteps(_) => net.graph.position(start).to_vec(),
    };
    let mut rng = substream_rng(seed, 0);
    let mut u = start;
    let mut steps = 0u64;
    let mut returns = 0u64;
    let mut exit_index = annulus_index(net.graph.position(start), &center);
    let mut escaped = false;
    loop {
        match stop {
            StopRule::MaxSteps(max) => {
                if steps >= *max {
                    break;
                }
            }
            StopRule::ExitBall { .. } => {
                if escaped || (steps > 0 && u == start) {
                    break;
                }
            }
        }
        u = sampler.step(u, &mut rng);
        steps += 1;
        if u == start {
            returns += 1;
        }
        let a = annulus_index(net.graph.position(u), &center);
        exit_index = exit_index.max(a);
        if let StopRule::ExitBall { n, .. } = stop {
            if a > *n {
                escaped = true;
            }
        }
    }
    Ok(WalkSummary { start, steps, returns, exit_index, escaped, seed })
}

fn outside_ball(pos: &[f64], center: &[f64], n: u32) -> bool {
    let mut d = 0.0f64;
    for k in 0..center.len() {
        d = d.max((pos[k] - center[k]).abs());
    }
    d > n as f64
}

fn escape_run(
    sampler: &WalkSampler,
    start: usize,
    center: &[f64],
    n: u32,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    const STEP_CAP: u64 = 1_000_000_000;
    let mut u = start;
    for _ in 0..STEP_CAP {
        u = sampler.step(u, rng);
        if outside_ball(sampler.net.graph.position(u), center, n) {
            return Ok(true);
        }
        if u == start {
            return Ok(false);
        }
    }
    Err(Error::Numeric("walk exceeded the step cap without deciding".into()))
}

/// Check that `B_n` around `center` lies inside the analysis window.
fn check_ball_range(net: &Network, center: &[f64], n: u32) -> Result<()> {
    let w = &net.graph.window;
    for k in 0..w.dim {
        if center[k] - (n as f64) < w.lower[k] || center[k] + (n as f64) > w.lower[k] + w.sides[k] {
            return Err(Error::range(format!("B_{n} leaves the analysis window on axis {k}")));
        }
    }
    Ok(())
}

/// Monte-Carlo estimate of the probability that the walk started at `start`
/// leaves `B_n` before returning to `start`.
///
/// Replica `k` always uses substream `k` of the seed, so estimates across
/// different `n` share their randomness (common random numbers) and are
/// pathwise monotone in `n`.
pub fn escape_probability(
    net: &Network,
    start: usize,
    center: &[f64],
    n: u32,
    replicas: u64,
    seed: u64,
) -> Result<FractionEstimate> {
    check_ball_range(net, center, n)?;
    let sampler = WalkSampler::new(net);
    if start >= net.graph.num_vertices() || sampler.degree(start) == 0 {
        return Err(Error::usage("start vertex is isolated"));
    }
    let successes = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream_rng(seed, k);
            escape_run(&sampler, start, center, n, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(FractionEstimate::new(successes, replicas))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: u32,
    pub resistance: f64,
    pub escape: FractionEstimate,
    /// Escape probability implied by the escape identity
    /// `p = 1 / (w(start) * R_eff)`.
    pub implied_escape: f64,
}

/// Batch effective resistances and escape estimates over a grid of radii.
pub fn recurrence_profile(
    net: &Network,
    center: &[f64],
    n_grid: &[u32],
    replicas: u64,
    seed: u64,
) -> Result<(usize, Vec<ProfileRow>)> {
    let start = net
        .graph
        .nearest_active_vertex(center)
        .ok_or_else(|| Error::usage("no active vertex near the center"))?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        check_ball_range(net, center, n)?;
        let sinks: Vec<usize> = (0..net.graph.num_vertices())
            .filter(|&v| {
                net.graph.active[v] && v != start && outside_ball(net.graph.position(v), center, n)
            })
            .collect();
        if sinks.is_empty() {
            return Err(Error::range(format!("no vertices outside B_{n}")));
        }
        let resistance = match effective_resistance(net, &[start], &sinks)? {
            Resistance::Finite(r) => r,
            Resistance::Infinite => f64::INFINITY,
        };
        let escape = escape_probability(net, start, center, n, replicas, seed)?;
        let implied_escape = 1.0 / (net.weight[start] * resistance);
        rows.push(ProfileRow { n, resistance, escape, implied_escape });
    }
    Ok((start, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Edge, GeometricGraph, GraphKind, TrimStatus};
    use crate::network::{assign_conductances, ConductanceModel};
    use crate::point_process::Window;

    fn chain_network() -> Network {
        let window = Window::new(2, vec![-10.0, -10.0], vec![20.0, 20.0], 0.0).unwrap();
        let positions = vec![0.0, 0.0, 1.0, 0.0];
        let g = GeometricGraph {
            kind: GraphKind::Delaunay,
            dim: 2,
            window,
            positions,
            edges: vec![Edge { u: 0, v: 1, length: 1.0 }],
            active: vec![true; 2],
            dual_cell: None,
            hull_vertex: None,
            trim: TrimStatus::Untrimmed,
        };
        assign_conductances(g, ConductanceModel::Unit).unwrap()
    }

    #[test]
    fn two_vertex_walk_alternates() {
        let net = chain_network();
        let sampler = WalkSampler::new(&net);
        let summary =
            simulate_walk(&sampler, 0, &StopRule::MaxSteps(10), 7).unwrap();
        assert_eq!(summary.steps, 10);
        assert_eq!(summary.returns, 5);
    }

    #[test]
    fn star_transitions_are_uniform() {
        let window = Window::new(2, vec![-10.0, -10.0], vec![20.0, 20.0], 0.0).unwrap();
        let positions = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0];
        let edges = (1..5).map(|v| Edge { u: 0, v, length: 1.0 }).collect();
        let g = GeometricGraph {
            kind: GraphKind::Delaunay,
            dim: 2,
            window,
            positions,
            edges,
            active: vec![true; 5],
            dual_cell: None,
            hull_vertex: None,
            trim: TrimStatus::Untrimmed,
        };
        let net = assign_conductances(g, ConductanceModel::Unit).unwrap();
        let sampler = WalkSampler::new(&net);
        let mut counts = [0u64; 5];
        let replicas = 40_000u64;
        let mut rng = substream_rng(5, 0);
        for _ in 0..replicas {
            counts[sampler.step(0, &mut rng)] += 1;
        }
        let expect = replicas as f64 / 4.0;
        let se = (replicas as f64 * 0.25 * 0.75).sqrt();
        for leaf in 1..5 {
            assert!(
                (counts[leaf] as f64 - expect).abs() < 3.0 * se,
                "leaf {leaf}: {}",
                counts[leaf]
            );
        }
    }

    #[test]
    fn reversibility_holds_algebraically() {
        let window = Window::new(2, vec![-10.0, -10.0], vec![20.0, 20.0], 0.0).unwrap();
        let positions = vec![0.0, 0.0, 1.0, 0.3, 2.0, -0.2, 0.5, 1.5];
        let edges = vec![
            Edge { u: 0, v: 1, length: 1.04 },
            Edge { u: 1, v: 2, length: 1.12 },
            Edge { u: 0, v: 3, length: 1.58 },
            Edge { u: 1, v: 3, length: 1.3 },
        ];
        let g = GeometricGraph {
            kind: GraphKind::Delaunay,
            dim: 2,
            window,
            positions,
            edges,
            active: vec![true; 4],
            dual_cell: None,
            hull_vertex: None,
            trim: TrimStatus::Untrimmed,
        };
        let net = assign_conductances(g, ConductanceModel::ExpDecay { a: 1.3 }).unwrap();
        let sampler = WalkSampler::new(&net);
        for u in 0..4 {
            for (v, puv) in sampler.transition_probabilities(u) {
                let pvu = sampler
                    .transition_probabilities(v)
                    .into_iter()
                    .find(|&(w, _)| w == u)
                    .map(|(_, p)| p)
                    .unwrap();
                let lhs = net.weight[u] * puv;
                let rhs = net.weight[v] * pvu;
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn isolated_start_vertex_is_an_error() {
        let window = Window::new(2, vec![-10.0, -10.0], vec![20.0, 20.0], 0.0).unwrap();
        let g = GeometricGraph {
            kind: GraphKind::Delaunay,
            dim: 2,
            window,
            positions: vec![0.0, 0.0, 1.0, 0.0, 5.0, 5.0],
            edges: vec![Edge { u: 0, v: 1, length: 1.0 }],
            active: vec![true; 3],
            dual_cell: None,
            hull_vertex: None,
            trim: TrimStatus::Untrimmed,
        };
        let net = assign_conductances(g, ConductanceModel::Unit).unwrap();
        let sampler = WalkSampler::new(&net);
        assert!(matches!(
            simulate_walk(&sampler, 2, &StopRule::MaxSteps(5), 1),
            Err(crate::Error::Usage(_))
        ));
    }

    #[test]
    fn alias_table_matches_weights() {
        let t = AliasTable::new(&[1.0, 2.0, 7.0]);
        let mut rng = substream_rng(11, 0);
        let mut counts = [0u64; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[t.sample(&mut rng)] += 1;
        }
        for (i, w) in [0.1, 0.2, 0.7].iter().enumerate() {
            let got = counts[i] as f64 / n as f64;
            assert!((got - w).abs() < 0.01, "weight {i}: {got} vs {w}");
        }
    }
}
