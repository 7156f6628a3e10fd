//! Envelope events for the planar recurrence argument.
//!
//! With constants `c1` (void-probability rate) and `c2` (count-deviation
//! coefficient), the events per radius `i` are:
//!
//! * `a_dt`: some Delaunay crossing edge at cut `i` is longer than
//!   `8 / sqrt(c1) * sqrt(log i)`;
//! * `c_dt`: the number of Delaunay crossing edges reaches
//!   `384 * c2 / sqrt(c1) * i * sqrt(log i)`;
//! * `a_vs`: some Voronoi-skeleton crossing edge is longer than
//!   `4 * sqrt(2) / sqrt(c1) * sqrt(log i)`;
//! * `c_vs`: the number of Voronoi-skeleton crossing edges reaches
//!   `64 * sqrt(2) * c2 / sqrt(c1) * i * sqrt(log i)`.
//!
//! Radii with `log i <= 1` are skipped.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::GeometricGraph;

use super::annuli::annulus_edge_stats;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub c1: f64,
    pub c2: f64,
}

impl EnvelopeConstants {
    pub fn dt_length_threshold(&self, i: u32) -> f64 {
        8.0 / self.c1.sqrt() * (i as f64).ln().sqrt()
    }
    pub fn dt_count_threshold(&self, i: u32) -> f64 {
        384.0 * self.c2 / self.c1.sqrt() * i as f64 * (i as f64).ln().sqrt()
    }
    pub fn vs_length_threshold(&self, i: u32) -> f64 {
        4.0 * 2.0f64.sqrt() / self.c1.sqrt() * (i as f64).ln().sqrt()
    }
    pub fn vs_count_threshold(&self, i: u32) -> f64 {
        64.0 * 2.0f64.sqrt() * self.c2 / self.c1.sqrt() * i as f64 * (i as f64).ln().sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub i: u32,
    /// True when `log i <= 1` and the thresholds are not meaningful.
    pub skipped: bool,
    pub a_dt: bool,
    pub c_dt: bool,
    pub a_vs: bool,
    pub c_vs: bool,
    pub dt_crossings: u64,
    pub vs_crossings: u64,
    pub dt_max_length: f64,
    pub vs_max_length: f64,
}

/// Evaluate the envelope events over an `i` grid for a Delaunay graph and a
/// Voronoi skeleton built from the same sample.
pub fn envelope_events(
    dt: &GeometricGraph,
    vs: &GeometricGraph,
    center: &[f64],
    i_grid: &[u32],
    constants: EnvelopeConstants,
) -> Result<Vec<EnvelopeRow>> {
    let imin = *i_grid.iter().min().unwrap_or(&1);
    let imax = *i_grid.iter().max().unwrap_or(&1);
    let dt_stats = annulus_edge_stats(dt, center, imin.max(1), imax)?;
    let vs_stats = annulus_edge_stats(vs, center, imin.max(1), imax)?;
    let mut rows = Vec::with_capacity(i_grid.len());
    for &i in i_grid {
        if (i as f64).ln() <= 1.0 {
            rows.push(EnvelopeRow {
                i,
                skipped: true,
                a_dt: false,
                c_dt: false,
                a_vs: false,
                c_vs: false,
                dt_crossings: 0,
                vs_crossings: 0,
                dt_max_length: 0.0,
                vs_max_length: 0.0,
            });
            continue;
        }
        let d = dt_stats.row(i).expect("grid within range");
        let v = vs_stats.row(i).expect("grid within range");
        rows.push(EnvelopeRow {
            i,
            skipped: false,
            a_dt: d.max_length > constants.dt_length_threshold(i),
            c_dt: d.count as f64 >= constants.dt_count_threshold(i),
            a_vs: v.max_length > constants.vs_length_threshold(i),
            c_vs: v.count as f64 >= constants.vs_count_threshold(i),
            dt_crossings: d.count,
            vs_crossings: v.count,
            dt_max_length: d.max_length,
            vs_max_length: v.max_length,
        });
    }
    Ok(rows)
}

/// Euler-formula count check: when no crossing edge is longer than the
/// length envelope, all crossing edges live in the square collar of
/// half-width `w = 8 / sqrt(c1) * sqrt(log i)` around the boundary of
/// `B_i`, and planarity bounds their number by three times the number of
/// sample points in that collar. Returns `None` for radii where the length
/// envelope fails (the premise is unavailable).
pub fn euler_crossing_check(
    dt: &GeometricGraph,
    center: &[f64],
    i: u32,
    constants: EnvelopeConstants,
) -> Result<Option<bool>> {
    let stats = annulus_edge_stats(dt, center, i, i)?;
    let row = stats.row(i).expect("single-row stats");
    let w = constants.dt_length_threshold(i);
    if row.max_length > w {
        return Ok(None);
    }
    let mut in_collar = 0u64;
    for v in 0..dt.num_vertices() {
        if !dt.active[v] {
            continue;
        }
        let pos = dt.position(v);
        let mut d = 0.0f64;
        for k in 0..center.len() {
            d = d.max((pos[k] - center[k]).abs());
        }
        if d >= i as f64 - w && d <= i as f64 + w {
            in_collar += 1;
        }
    }
    Ok(Some(row.count <= 3 * in_collar))
}
