//! File formats: CSV point sets with a JSON metadata sidecar, and NDJSON
//! for graphs, networks, box fields and walk summaries.
//!
//! All float formatting uses Rust's shortest round-trip representation, so
//! written files parse back to bit-identical values and re-runs with fixed
//! seeds produce byte-identical outputs.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::criteria::{BoxField, BoxPath};
use crate::error::{Error, Result};
use crate::geometry::{Edge, GeometricGraph, GraphKind, TrimStatus};
use crate::network::{ConductanceModel, Network};
use crate::point_process::{PointSet, ProcessDescriptor, Window};
use crate::walk::WalkSummary;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSetMeta {
    pub dimension: usize,
    pub window: Window,
    pub process: ProcessDescriptor,
    pub seed: u64,
}

/// `x,y[,z][,mark]` with full round-trip precision.
pub fn write_pointset_csv(points: &PointSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    let dim = points.dim();
    let header: &str = match (dim, points.marks().is_some()) {
        (2, false) => "x,y",
        (2, true) => "x,y,mark",
        (3, false) => "x,y,z",
        (3, true) => "x,y,z,mark",
        _ => return Err(Error::parameter("dimension must be 2 or 3")),
    };
    out.push_str(header);
    out.push('\n');
    for i in 0..points.len() {
        let p = points.point(i);
        for (k, c) in p.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{c}");
        }
        if let Some(marks) = points.marks() {
            let _ = write!(out, ",{}", marks[i]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    let meta = PointSetMeta {
        dimension: dim,
        window: points.window.clone(),
        process: points.process.clone(),
        seed: points.seed,
    };
    let sidecar = sidecar_path(path);
    std::fs::write(sidecar, serde_json::to_string_pretty(&meta).map_err(json_err)? + "\n")?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn read_pointset_csv(path: &Path) -> Result<PointSet> {
    let meta_path = sidecar_path(path);
    let meta: PointSetMeta = serde_json::from_str(
        &std::fs::read_to_string(&meta_path)
            .map_err(|e| Error::Format(format!("missing sidecar {}: {e}", meta_path.display())))?,
    )
    .map_err(json_err)?;
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty point-set file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let dim = meta.dimension;
    let expect_marks = cols.last() == Some(&"mark");
    if cols.len() != dim + usize::from(expect_marks) {
        return Err(Error::Format(format!(
            "header '{header}' does not match dimension {dim}"
        )));
    }
    let mut coords = Vec::new();
    let mut marks = if expect_marks { Some(Vec::new()) } else { None };
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Format(format!("row {}: wrong arity", lineno + 2)));
        }
        for f in &fields[..dim] {
            coords.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: {e}", lineno + 2)))?,
            );
        }
        if let Some(m) = &mut marks {
            m.push(
                fields[dim]
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: {e}", lineno + 2)))?,
            );
        }
    }
    PointSet::from_coords(meta.window, meta.process, meta.seed, coords, marks)
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

/// Provenance stamps carried by every NDJSON header record.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RecordStamp {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
}

impl RecordStamp {
    pub fn new(config_hash: Option<String>, seed: Option<u64>) -> RecordStamp {
        RecordStamp { config_hash, seed, version: crate::VERSION.to_string() }
    }
}

/// NDJSON graph format: a header record, one record per vertex, one per
/// edge (with conductance when a network is written).
pub fn write_graph_ndjson(
    graph: &GeometricGraph,
    net: Option<&Network>,
    stamp: &RecordStamp,
    w: &mut impl Write,
) -> Result<()> {
    let header = json!({
        "type": "header",
        "kind": graph.kind,
        "dim": graph.dim,
        "window": graph.window,
        "trim": graph.trim,
        "conductance": net.map(|n| n.model),
        "stamp": stamp,
    });
    writeln!(w, "{header}")?;
    for v in 0..graph.num_vertices() {
        if !graph.active[v] {
            continue;
        }
        let rec = json!({"type": "vertex", "id": v, "coords": graph.position(v)});
        writeln!(w, "{rec}")?;
    }
    for (e, edge) in graph.edges.iter().enumerate() {
        let mut rec = json!({
            "type": "edge", "u": edge.u, "v": edge.v, "length": edge.length,
        });
        if let Some(net) = net {
            rec["C"] = json!(net.conductance[e]);
        }
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

/// Read back a graph (and its conductances when present).
pub fn read_graph_ndjson(r: &mut impl BufRead) -> Result<(GeometricGraph, Option<Vec<f64>>)> {
    let mut lines = r.lines();
    let header: serde_json::Value = match lines.next() {
        Some(line) => serde_json::from_str(&line?).map_err(json_err)?,
        None => return Err(Error::Format("empty graph file".into())),
    };
    if header["type"] != "header" {
        return Err(Error::Format("first record must be the header".into()));
    }
    let kind: GraphKind = serde_json::from_value(header["kind"].clone()).map_err(json_err)?;
    let dim: usize = serde_json::from_value(header["dim"].clone()).map_err(json_err)?;
    let window: Window = serde_json::from_value(header["window"].clone()).map_err(json_err)?;
    let trim: TrimStatus = serde_json::from_value(header["trim"].clone()).map_err(json_err)?;

    let mut vertices: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut conductance: Vec<f64> = Vec::new();
    let mut any_c = false;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: serde_json::Value = serde_json::from_str(&line).map_err(json_err)?;
        match rec["type"].as_str() {
            Some("vertex") => {
                let id = rec["id"].as_u64().ok_or_else(|| Error::Format("vertex id".into()))?;
                let coords: Vec<f64> =
                    serde_json::from_value(rec["coords"].clone()).map_err(json_err)?;
                vertices.push((id as usize, coords));
            }
            Some("edge") => {
                let u = rec["u"].as_u64().ok_or_else(|| Error::Format("edge u".into()))? as usize;
                let v = rec["v"].as_u64().ok_or_else(|| Error::Format("edge v".into()))? as usize;
                let length = rec["length"]
                    .as_f64()
                    .ok_or_else(|| Error::Format("edge length".into()))?;
                edges.push(Edge { u, v, length });
                if let Some(c) = rec["C"].as_f64() {
                    conductance.push(c);
                    any_c = true;
                } else {
                    conductance.push(f64::NAN);
                }
            }
            _ => return Err(Error::Format("unknown record type".into())),
        }
    }
    let n = vertices.iter().map(|(id, _)| id + 1).max().unwrap_or(0);
    let mut positions = vec![0.0; n * dim];
    let mut active = vec![false; n];
    for (id, coords) in vertices {
        if coords.len() != dim {
            return Err(Error::Format("vertex arity mismatch".into()));
        }
        positions[id * dim..(id + 1) * dim].copy_from_slice(&coords);
        active[id] = true;
    }
    let graph = GeometricGraph {
        kind,
        dim,
        window,
        positions,
        edges,
        active,
        dual_cell: None,
        hull_vertex: None,
        trim,
    };
    Ok((graph, if any_c { Some(conductance) } else { None }))
}

/// NDJSON for a box field: header, one record per box, one per stored path.
pub fn write_boxfield_ndjson(
    field: &BoxField,
    stamp: &RecordStamp,
    w: &mut impl Write,
) -> Result<()> {
    let header = json!({
        "type": "header",
        "dim": field.dim,
        "box_side": field.box_side,
        "z_lo": field.z_lo,
        "z_hi": field.z_hi,
        "params": field.params,
        "excluded_partial": field.excluded_partial,
        "stamp": stamp,
    });
    writeln!(w, "{header}")?;
    for idx in 0..field.num_boxes() {
        let rec = json!({
            "type": "box",
            "z": field.z_of(idx),
            "good": field.flags[idx],
            "reference": field.reference[idx],
        });
        writeln!(w, "{rec}")?;
    }
    for (&(a, b), path) in &field.paths {
        let rec = json!({
            "type": "path",
            "z1": field.z_of(a),
            "z2": field.z_of(b),
            "vertices": path.vertices,
            "hops": path.hops,
            "max_edge_length": path.max_edge_length,
        });
        writeln!(w, "{rec}")?;
    }
    for ((a, b), reason) in &field.demotions {
        let rec = json!({
            "type": "demotion",
            "z1": field.z_of(*a),
            "z2": field.z_of(*b),
            "reason": reason,
        });
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

pub fn write_walk_summaries_ndjson(
    summaries: &[WalkSummary],
    stamp: &RecordStamp,
    w: &mut impl Write,
) -> Result<()> {
    let header = json!({"type": "header", "records": summaries.len(), "stamp": stamp});
    writeln!(w, "{header}")?;
    for s in summaries {
        let rec = serde_json::to_string(s).map_err(json_err)?;
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

/// Round-trip helper used by the CLI: network from a graph file plus model.
pub fn network_from_parts(
    graph: GeometricGraph,
    conductance: Option<Vec<f64>>,
    model: ConductanceModel,
) -> Result<Network> {
    match conductance {
        Some(c) if c.iter().all(|x| x.is_finite()) => {
            let mut weight = vec![0.0; graph.num_vertices()];
            for (e, edge) in graph.edges.iter().enumerate() {
                weight[edge.u] += c[e];
                weight[edge.v] += c[e];
            }
            Ok(Network { graph, model, conductance: c, weight })
        }
        _ => crate::network::assign_conductances(graph, model),
    }
}

/// Serialize a `BoxPath` list for plot-ready consumption.
pub fn paths_to_json(paths: &[(usize, usize, BoxPath)]) -> serde_json::Value {
    json!(paths
        .iter()
        .map(|(a, b, p)| json!({
            "pair": [a, b],
            "hops": p.hops,
            "max_edge_length": p.max_edge_length,
            "vertices": p.vertices,
        }))
        .collect::<Vec<_>>())
}
