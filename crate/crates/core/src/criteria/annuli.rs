//! Classification of graph edges by the sup-norm annuli they cross.
//!
//! `Ed(i)` is the set of edges with exactly one endpoint in `B_i` (the
//! sup-norm ball of radius `i` around the chosen center); an edge whose
//! endpoints lie in annuli `i1 < i2` belongs to `Ed(i)` for every
//! `i1 <= i < i2` and has span `j = i2 - i1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometricGraph;
use crate::network::annulus_index;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusRow {
    pub i: u32,
    /// Edge ids crossing the cut at radius `i`.
    pub edge_ids: Vec<usize>,
    /// span j -> number of crossing edges with that span
    pub span_hist: BTreeMap<u32, u64>,
    /// Largest Euclidean length among the crossing edges.
    pub max_length: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusStats {
    pub center: Vec<f64>,
    pub i0: u32,
    pub imax: u32,
    pub rows: Vec<AnnulusRow>,
}

impl AnnulusStats {
    pub fn row(&self, i: u32) -> Option<&AnnulusRow> {
        if i < self.i0 || i > self.imax {
            return None;
        }
        Some(&self.rows[(i - self.i0) as usize])
    }
}

/// Exact classification of crossing edges for `i` in `[i0, imax]`.
pub fn annulus_edge_stats(
    graph: &GeometricGraph,
    center: &[f64],
    i0: u32,
    imax: u32,
) -> Result<AnnulusStats> {
    if i0 == 0 || i0 > imax {
        return Err(Error::range("need 1 <= i0 <= imax"));
    }
    if center.len() != graph.dim {
        return Err(Error::usage("center arity must match the graph dimension"));
    }
    let w = &graph.window;
    for k in 0..w.dim {
        if center[k] - (imax as f64) < w.lower[k] || center[k] + (imax as f64) > w.lower[k] + w.sides[k]
        {
            return Err(Error::range(format!(
                "B_{imax} leaves the analysis window along axis {k}"
            )));
        }
    }
    let mut rows: Vec<AnnulusRow> = (i0..=imax)
        .map(|i| AnnulusRow {
            i,
            edge_ids: Vec::new(),
            span_hist: BTreeMap::new(),
            max_length: 0.0,
            count: 0,
        })
        .collect();
    for (e, edge) in graph.edges.iter().enumerate() {
        let au = annulus_index(graph.position(edge.u), center);
        let av = annulus_index(graph.position(edge.v), center);
        let (lo, hi) = (au.min(av), au.max(av));
        if lo == hi {
            continue;
        }
        let span = hi - lo;
        for i in lo.max(i0)..hi.min(imax + 1) {
            let row = &mut rows[(i - i0) as usize];
            row.edge_ids.push(e);
            *row.span_hist.entry(span).or_insert(0) += 1;
            row.max_length = row.max_length.max(edge.length);
            row.count += 1;
        }
    }
    Ok(AnnulusStats { center: center.to_vec(), i0, imax, rows })
}
