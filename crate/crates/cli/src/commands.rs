//! Subcommand implementations. Every handler is a pure function of its
//! inputs plus the resolved seed; all outputs are deterministic NDJSON/JSON
//! files stamped with the config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use geowalk_core::criteria::{
    self, annulus_edge_stats, build_box_path_gabriel, build_box_path_vs,
    classify_good_boxes_gabriel, classify_good_boxes_vs, envelope_events, recurrence_series,
    verify_rough_embedding, BoxField, EnvelopeConstants, PathOutcome,
};
use geowalk_core::geometry::{
    delaunay_graph, gabriel, trim_to_analysis_region, voronoi_skeleton, GeometricGraph,
    GraphKind, Triangulation,
};
use geowalk_core::io::{
    read_pointset_csv, write_boxfield_ndjson, write_graph_ndjson, write_pointset_csv,
    write_walk_summaries_ndjson, RecordStamp,
};
use geowalk_core::network::{assign_conductances, effective_resistance, Resistance};
use geowalk_core::paths_chains::{
    find_descending_chain, gabriel_short_path, verify_certificate_exact,
};
use geowalk_core::point_process::{
    empirical_void_probability, fit_count_bound_d3, fit_deviation_constants_d2, sample, PointSet,
};
use geowalk_core::rng::substream_seed;
use geowalk_core::walk::{escape_probability, recurrence_profile, simulate_walk, StopRule, WalkSampler};

use crate::config::{BoxVariant, ExperimentConfig, GoodBoxConfig};
use crate::{EXIT_COUNTEREXAMPLE, EXIT_OK};

pub struct Ctx {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub hash: String,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn new(mut config: ExperimentConfig, seed: u64, out_dir: Option<PathBuf>) -> Result<Ctx> {
        config.seed = seed;
        let out_dir = out_dir.unwrap_or_else(|| PathBuf::from(&config.output_dir));
        config.output_dir = out_dir.display().to_string();
        let hash = crate::config::config_hash(&config);
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("cannot create {}", out_dir.display()))?;
        Ok(Ctx { config, seed, hash, out_dir })
    }

    pub fn stamp(&self) -> RecordStamp {
        RecordStamp::new(Some(self.hash.clone()), Some(self.seed))
    }

    fn writer(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
        ))
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut w = self.writer(name)?;
        writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
        Ok(())
    }
}

pub fn cmd_sample(ctx: &Ctx) -> Result<i32> {
    let points = sample(&ctx.config.window, &ctx.config.process, ctx.seed)?;
    write_pointset_csv(&points, &ctx.out_dir.join("points.csv"))?;
    println!(
        "sampled {} points into {}",
        points.len(),
        ctx.out_dir.join("points.csv").display()
    );
    Ok(EXIT_OK)
}

/// Build the requested graph over a stored sample; optionally trim it.
pub fn build_graph_from_points(
    points: &PointSet,
    kind: GraphKind,
    trim: bool,
) -> Result<(Triangulation, GeometricGraph)> {
    let tri = Triangulation::build(points)?;
    let graph = match kind {
        GraphKind::Delaunay => delaunay_graph(&tri, &points.window),
        GraphKind::Gabriel => gabriel(points, &tri)?,
        GraphKind::VoronoiSkeleton => voronoi_skeleton(&tri, &points.window),
    };
    let graph =
        if trim { trim_to_analysis_region(&graph, &tri, &points.window)? } else { graph };
    Ok((tri, graph))
}

pub fn cmd_build_graph(points_path: &Path, kind: GraphKind, trim: bool, out: &Path) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let (_, graph) = build_graph_from_points(&points, kind, trim)?;
    let mut w = BufWriter::new(File::create(out)?);
    write_graph_ndjson(&graph, None, &RecordStamp::new(None, Some(points.seed)), &mut w)?;
    println!(
        "{} graph: {} vertices, {} edges{}",
        kind_name(kind),
        graph.active.iter().filter(|&&a| a).count(),
        graph.edges.len(),
        if trim { " (trimmed)" } else { "" }
    );
    Ok(EXIT_OK)
}

fn kind_name(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::Delaunay => "dt",
        GraphKind::Gabriel => "gab",
        GraphKind::VoronoiSkeleton => "vs",
    }
}

pub fn cmd_verify_assumptions(ctx: &Ctx) -> Result<i32> {
    let ac = ctx
        .config
        .analysis
        .assumptions
        .as_ref()
        .ok_or_else(|| anyhow!("config error at `analysis.assumptions`: missing"))?;
    let dim = ctx.config.window.dim;
    let mut voids = Vec::new();
    for (k, &side) in ac.void_sides.iter().enumerate() {
        let est = empirical_void_probability(
            &ctx.config.process,
            dim,
            side,
            ac.replicas,
            substream_seed(ctx.seed, 100 + k as u64),
        )?;
        voids.push(est);
    }
    let d2 = match (&ac.rect_grid, dim) {
        (Some(grid), 2) => Some(fit_deviation_constants_d2(
            &ctx.config.process,
            grid,
            ac.replicas,
            substream_seed(ctx.seed, 200),
        )?),
        _ => None,
    };
    let d3 = match (&ac.m_grid, dim) {
        (Some(grid), 3) => Some(fit_count_bound_d3(
            &ctx.config.process,
            ac.void_sides.last().copied().unwrap_or(2.0),
            grid,
            ac.replicas,
            substream_seed(ctx.seed, 300),
        )?),
        _ => None,
    };
    let report = json!({
        "stamp": ctx.stamp(),
        "void": voids,
        "deviation_d2": d2,
        "count_bound_d3": d3,
    });
    ctx.write_json("assumptions.json", &report)?;
    for v in &voids {
        println!(
            "void L={}: p={:.6} [{:.6}, {:.6}] c1_hat={:.4}",
            v.box_side, v.fraction.estimate, v.fraction.ci_low, v.fraction.ci_high, v.c1_hat
        );
    }
    Ok(EXIT_OK)
}

pub fn cmd_annuli(
    ctx: &Ctx,
    points_path: &Path,
    kind: GraphKind,
    i0: u32,
    imax: u32,
    center: Option<Vec<f64>>,
) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let (_, graph) = build_graph_from_points(&points, kind, true)?;
    let center = center.unwrap_or_else(|| points.window.center());
    let stats = annulus_edge_stats(&graph, &center, i0, imax)?;
    let mut w = ctx.writer(&format!("annuli_{}.ndjson", kind_name(kind)))?;
    writeln!(
        w,
        "{}",
        json!({"type": "header", "kind": kind, "center": center, "i0": i0, "imax": imax, "stamp": ctx.stamp()})
    )?;
    for row in &stats.rows {
        writeln!(
            w,
            "{}",
            json!({
                "type": "annulus", "i": row.i, "count": row.count,
                "max_length": row.max_length,
                "span_hist": row.span_hist,
            })
        )?;
    }
    println!("annuli written for {} cuts", stats.rows.len());
    Ok(EXIT_OK)
}

pub fn cmd_recurrence_series(
    ctx: &Ctx,
    points_path: &Path,
    kind: GraphKind,
    i0: u32,
    imax: u32,
) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let (_, graph) = build_graph_from_points(&points, kind, true)?;
    let center = points.window.center();
    let stats = annulus_edge_stats(&graph, &center, i0, imax)?;
    let series = recurrence_series(&stats, ctx.config.conductance.sup_c())?;
    let report = json!({
        "stamp": ctx.stamp(),
        "kind": kind,
        "sup_c": series.sup_c,
        "coarse_total": series.coarse_total(),
        "sharp_total": series.sharp_total(),
        "loglog_fit": series.loglog_fit,
        "log_fit": series.log_fit,
        "terms": series.terms,
    });
    ctx.write_json(&format!("series_{}.json", kind_name(kind)), &report)?;
    println!(
        "series: coarse {:.4}, sharp {:.4} over cuts {}..{}",
        series.coarse_total(),
        series.sharp_total(),
        i0,
        imax
    );
    Ok(EXIT_OK)
}

pub fn cmd_envelopes(ctx: &Ctx) -> Result<i32> {
    let ec = ctx
        .config
        .analysis
        .envelopes
        .as_ref()
        .ok_or_else(|| anyhow!("config error at `analysis.envelopes`: missing"))?;
    if ctx.config.window.dim != 2 {
        bail!("envelope events are defined for dimension 2");
    }
    let constants = envelope_constants(ctx, ec)?;
    let rows = envelope_frequencies(ctx, ec, constants)?;
    let report = json!({
        "stamp": ctx.stamp(),
        "c1": constants.c1,
        "c2": constants.c2,
        "replicas": ec.replicas,
        "rows": rows,
    });
    ctx.write_json("envelopes.json", &report)?;
    println!("envelope frequencies over {} radii written", rows.len());
    Ok(EXIT_OK)
}

pub fn envelope_constants(
    ctx: &Ctx,
    ec: &crate::config::EnvelopesConfig,
) -> Result<EnvelopeConstants> {
    let c1 = match ec.c1 {
        Some(c) => c,
        None => {
            // calibration side: expected count near 9
            let density =
                geowalk_core::point_process::empirical_density(&ctx.config.process, 2, 200, ctx.seed)?;
            let side = (9.0 / density.max(1e-9)).sqrt();
            empirical_void_probability(
                &ctx.config.process,
                2,
                side,
                ec.replicas.max(2000),
                substream_seed(ctx.seed, 11),
            )?
            .c1_hat
        }
    };
    let c2 = match ec.c2 {
        Some(c) => c,
        None => {
            2.0 * geowalk_core::point_process::empirical_density(
                &ctx.config.process,
                2,
                200,
                substream_seed(ctx.seed, 12),
            )?
        }
    };
    Ok(EnvelopeConstants { c1, c2 })
}

#[derive(serde::Serialize)]
pub struct EnvelopeFrequencyRow {
    pub i: u32,
    pub a_dt: f64,
    pub c_dt: f64,
    pub a_vs: f64,
    pub c_vs: f64,
}

pub fn envelope_frequencies(
    ctx: &Ctx,
    ec: &crate::config::EnvelopesConfig,
    constants: EnvelopeConstants,
) -> Result<Vec<EnvelopeFrequencyRow>> {
    let mut counts = vec![[0u64; 4]; ec.i_grid.len()];
    for k in 0..ec.replicas {
        let points = sample(&ctx.config.window, &ctx.config.process, substream_seed(ctx.seed, 50_000 + k))?;
        let tri = Triangulation::build(&points)?;
        let dt = trim_to_analysis_region(&delaunay_graph(&tri, &points.window), &tri, &points.window)?;
        let vs =
            trim_to_analysis_region(&voronoi_skeleton(&tri, &points.window), &tri, &points.window)?;
        let center = points.window.center();
        let rows = envelope_events(&dt, &vs, &center, &ec.i_grid, constants)?;
        for (j, row) in rows.iter().enumerate() {
            counts[j][0] += u64::from(row.a_dt);
            counts[j][1] += u64::from(row.c_dt);
            counts[j][2] += u64::from(row.a_vs);
            counts[j][3] += u64::from(row.c_vs);
        }
    }
    Ok(ec
        .i_grid
        .iter()
        .zip(&counts)
        .map(|(&i, c)| EnvelopeFrequencyRow {
            i,
            a_dt: c[0] as f64 / ec.replicas as f64,
            c_dt: c[1] as f64 / ec.replicas as f64,
            a_vs: c[2] as f64 / ec.replicas as f64,
            c_vs: c[3] as f64 / ec.replicas as f64,
        })
        .collect())
}

/// Classify boxes for a sample, optionally assigning VS reference vertices.
pub fn classify_boxes(
    points: &PointSet,
    gb: &GoodBoxConfig,
    graphs: Option<(&Triangulation, &GeometricGraph)>,
) -> Result<BoxField> {
    let window = &points.window;
    match gb.variant {
        BoxVariant::Vs => {
            let c4 = gb.c4.ok_or_else(|| {
                anyhow!("config error at `analysis.good_boxes.c4`: required for the vs variant")
            })?;
            let mut field = classify_good_boxes_vs(points, window, gb.box_side, c4)?;
            if let Some((tri, vs)) = graphs {
                criteria::assign_vs_reference_vertices(&mut field, points, tri, vs)?;
            }
            Ok(field)
        }
        BoxVariant::Gabriel => {
            let m = gb
                .m
                .ok_or_else(|| anyhow!("config error at `analysis.good_boxes.m`: required"))?;
            Ok(classify_good_boxes_gabriel(points, window, gb.box_side, m, gb.alpha)?)
        }
    }
}

pub fn cmd_good_boxes(ctx: &Ctx, points_path: &Path) -> Result<i32> {
    let gb = ctx
        .config
        .analysis
        .good_boxes
        .as_ref()
        .ok_or_else(|| anyhow!("config error at `analysis.good_boxes`: missing"))?;
    let points = read_pointset_csv(points_path)?;
    let field = match gb.variant {
        BoxVariant::Vs => {
            let tri = Triangulation::build(&points)?;
            let vs = voronoi_skeleton(&tri, &points.window);
            classify_boxes(&points, gb, Some((&tri, &vs)))?
        }
        BoxVariant::Gabriel => classify_boxes(&points, gb, None)?,
    };
    let mut w = ctx.writer("boxes.ndjson")?;
    write_boxfield_ndjson(&field, &ctx.stamp(), &mut w)?;
    println!("{} boxes, {} good", field.num_boxes(), field.good_count());
    Ok(EXIT_OK)
}

/// Build paths between all adjacent good pairs; returns the demotion count.
pub fn build_all_box_paths(
    points: &PointSet,
    field: &mut BoxField,
    variant: BoxVariant,
    tri: &Triangulation,
    vs: Option<&GeometricGraph>,
    gab: Option<&GeometricGraph>,
) -> Result<usize> {
    let pairs = field.adjacent_good_pairs();
    let mut demoted = 0;
    for (a, b) in pairs {
        let outcome = match variant {
            BoxVariant::Vs => {
                let vs = vs.ok_or_else(|| anyhow!("vs graph required"))?;
                build_box_path_vs(points, tri, vs, field, a, b)?
            }
            BoxVariant::Gabriel => {
                let gab = gab.ok_or_else(|| anyhow!("gabriel graph required"))?;
                build_box_path_gabriel(points, gab, field, a, b)?.0
            }
        };
        if matches!(outcome, PathOutcome::Demoted { .. }) {
            demoted += 1;
        }
    }
    Ok(demoted)
}

pub fn cmd_box_paths(ctx: &Ctx, points_path: &Path) -> Result<i32> {
    let gb = ctx
        .config
        .analysis
        .good_boxes
        .as_ref()
        .ok_or_else(|| anyhow!("config error at `analysis.good_boxes`: missing"))?;
    let points = read_pointset_csv(points_path)?;
    let tri = Triangulation::build(&points)?;
    let (mut field, vs, gab) = match gb.variant {
        BoxVariant::Vs => {
            let vs = voronoi_skeleton(&tri, &points.window);
            let vs = trim_to_analysis_region(&vs, &tri, &points.window)?;
            let field = classify_boxes(&points, gb, Some((&tri, &vs)))?;
            (field, Some(vs), None)
        }
        BoxVariant::Gabriel => {
            let gab = gabriel(&points, &tri)?;
            (classify_boxes(&points, gb, None)?, None, Some(gab))
        }
    };
    let demoted =
        build_all_box_paths(&points, &mut field, gb.variant, &tri, vs.as_ref(), gab.as_ref())?;
    let mut w = ctx.writer("boxes.ndjson")?;
    write_boxfield_ndjson(&field, &ctx.stamp(), &mut w)?;
    println!(
        "paths: {} verified, {} demoted over {} good boxes",
        field.paths.len(),
        demoted,
        field.good_count()
    );
    Ok(if demoted > 0 { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}

pub fn cmd_rough_embedding(ctx: &Ctx, points_path: &Path) -> Result<i32> {
    let gb = ctx
        .config
        .analysis
        .good_boxes
        .as_ref()
        .ok_or_else(|| anyhow!("config error at `analysis.good_boxes`: missing"))?;
    let points = read_pointset_csv(points_path)?;
    let tri = Triangulation::build(&points)?;
    let (mut field, graph) = match gb.variant {
        BoxVariant::Vs => {
            let vs = voronoi_skeleton(&tri, &points.window);
            let vs = trim_to_analysis_region(&vs, &tri, &points.window)?;
            let field = classify_boxes(&points, gb, Some((&tri, &vs)))?;
            (field, vs)
        }
        BoxVariant::Gabriel => {
            let gab = gabriel(&points, &tri)?;
            (classify_boxes(&points, gb, None)?, gab)
        }
    };
    let demoted = match gb.variant {
        BoxVariant::Vs => {
            build_all_box_paths(&points, &mut field, gb.variant, &tri, Some(&graph), None)?
        }
        BoxVariant::Gabriel => {
            build_all_box_paths(&points, &mut field, gb.variant, &tri, None, Some(&graph))?
        }
    };
    let net = assign_conductances(graph, ctx.config.conductance)?;
    let report = verify_rough_embedding(&field, &net)?;
    let beta_bound = (2 * points.dim()) as u64;
    let ok = report.beta <= beta_bound;
    let out = json!({
        "stamp": ctx.stamp(),
        "alpha": report.alpha,
        "beta": report.beta,
        "beta_bound": beta_bound,
        "pairs": report.pairs,
        "demoted": demoted,
        "beta_within_bound": ok,
    });
    ctx.write_json("rough_embedding.json", &out)?;
    println!("alpha = {:.4}, beta = {} (bound {beta_bound})", report.alpha, report.beta);
    Ok(if ok && demoted == 0 { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
}

pub fn cmd_resistance(
    ctx: &Ctx,
    points_path: &Path,
    kind: GraphKind,
    n: u32,
) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let (_, graph) = build_graph_from_points(&points, kind, true)?;
    let net = assign_conductances(graph, ctx.config.conductance)?;
    let center = points.window.center();
    let start = net
        .graph
        .nearest_active_vertex(&center)
        .ok_or_else(|| anyhow!("no active vertex near the window center"))?;
    let sinks: Vec<usize> = (0..net.graph.num_vertices())
        .filter(|&v| {
            net.graph.active[v] && v != start && {
                let p = net.graph.position(v);
                (0..net.graph.dim).any(|k| (p[k] - center[k]).abs() > n as f64)
            }
        })
        .collect();
    if sinks.is_empty() {
        bail!("no vertices outside B_{n}");
    }
    let r = effective_resistance(&net, &[start], &sinks)?;
    let bound = geowalk_core::network::annulus_reduction_bound(&net, &center, 1, n)?;
    let report = json!({
        "stamp": ctx.stamp(),
        "kind": kind,
        "n": n,
        "start": start,
        "resistance": match r { Resistance::Finite(x) => json!(x), Resistance::Infinite => json!("infinite") },
        "certified_lower_bound": bound.total,
    });
    ctx.write_json("resistance.json", &report)?;
    match r {
        Resistance::Finite(x) => println!("R_eff = {x:.6}, certified bound {:.6}", bound.total),
        Resistance::Infinite => println!("R_eff = infinite (disconnected after trim)"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_walk(
    ctx: &Ctx,
    points_path: &Path,
    kind: GraphKind,
    n: Option<u32>,
    max_steps: Option<u64>,
    replicas: u64,
) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let (_, graph) = build_graph_from_points(&points, kind, true)?;
    let net = assign_conductances(graph, ctx.config.conductance)?;
    let center = points.window.center();
    let start = net
        .graph
        .nearest_active_vertex(&center)
        .ok_or_else(|| anyhow!("no active vertex near the window center"))?;
    match (n, max_steps) {
        (Some(n), _) => {
            let est = escape_probability(&net, start, &center, n, replicas, ctx.seed)?;
            let report = json!({
                "stamp": ctx.stamp(),
                "start": start, "n": n, "replicas": replicas,
                "escape": est,
            });
            ctx.write_json("walk.json", &report)?;
            println!(
                "escape probability from vertex {start} out of B_{n}: {:.5} [{:.5}, {:.5}]",
                est.estimate, est.ci_low, est.ci_high
            );
        }
        (None, Some(max)) => {
            let sampler = WalkSampler::new(&net);
            let summaries: Vec<_> = (0..replicas)
                .map(|k| {
                    simulate_walk(&sampler, start, &StopRule::MaxSteps(max), substream_seed(ctx.seed, k))
                })
                .collect::<geowalk_core::Result<_>>()?;
            let mut w = ctx.writer("walks.ndjson")?;
            write_walk_summaries_ndjson(&summaries, &ctx.stamp(), &mut w)?;
            println!("{} walks of {max} steps written", summaries.len());
        }
        (None, None) => bail!("need --n or --max-steps"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_short_path(ctx: &Ctx, points_path: &Path, x: usize, y: usize) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let tri = Triangulation::build(&points)?;
    let gab = gabriel(&points, &tri)?;
    let path = gabriel_short_path(&points, &gab, x, y)?;
    let exact_ok = verify_certificate_exact(&points, &path);
    let report = json!({
        "stamp": ctx.stamp(),
        "x": x, "y": y,
        "vertices": path.vertices,
        "sq_lengths": path.sq_lengths,
        "budget": path.budget,
        "certificate_exact": exact_ok,
    });
    ctx.write_json("short_path.json", &report)?;
    println!(
        "path of {} hops, sum of squared hops {:.6} <= budget {:.6}: {}",
        path.hops(),
        path.sq_length_sum(),
        path.budget,
        exact_ok
    );
    Ok(if exact_ok { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
}

pub fn cmd_chains(ctx: &Ctx, points_path: &Path, min_len: usize, budget: u64) -> Result<i32> {
    let points = read_pointset_csv(points_path)?;
    let found = find_descending_chain(&points, min_len, budget)?;
    let report = json!({
        "stamp": ctx.stamp(),
        "min_len": min_len,
        "budget": budget,
        "chain": found.chain,
        "length": found.chain.len(),
        "budget_exhausted": found.budget_exhausted,
        "extensions_used": found.extensions_used,
    });
    ctx.write_json("chains.json", &report)?;
    println!(
        "longest descending chain found: {} points{}",
        found.chain.len(),
        if found.budget_exhausted { " (budget exhausted)" } else { "" }
    );
    Ok(EXIT_OK)
}

/// The full pipeline: sample, build, trim, assign, analyze.
pub fn cmd_run(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.config;
    ctx.write_json("resolved_config.json", &serde_json::to_value(cfg)?)?;

    let points = sample(&cfg.window, &cfg.process, ctx.seed)?;
    write_pointset_csv(&points, &ctx.out_dir.join("points.csv"))?;
    println!("sampled {} points", points.len());

    let tri = Triangulation::build(&points)?;
    let mut exit = EXIT_OK;
    let center = cfg.window.center();

    let mut graphs: Vec<(GraphKind, GeometricGraph)> = Vec::new();
    for &kind in &cfg.graphs {
        let graph = match kind {
            GraphKind::Delaunay => delaunay_graph(&tri, &points.window),
            GraphKind::Gabriel => gabriel(&points, &tri)?,
            GraphKind::VoronoiSkeleton => voronoi_skeleton(&tri, &points.window),
        };
        let trimmed = trim_to_analysis_region(&graph, &tri, &points.window)?;
        graphs.push((kind, trimmed));
    }

    for (kind, graph) in &graphs {
        let net = assign_conductances(graph.clone(), cfg.conductance)?;
        let mut w = ctx.writer(&format!("network_{}.ndjson", kind_name(*kind)))?;
        write_graph_ndjson(graph, Some(&net), &ctx.stamp(), &mut w)?;

        if let Some(ac) = &cfg.analysis.annuli {
            let c = ac.center.clone().unwrap_or_else(|| center.clone());
            let stats = annulus_edge_stats(graph, &c, ac.i0, ac.imax)?;
            let series = recurrence_series(&stats, cfg.conductance.sup_c())?;
            let bound =
                geowalk_core::network::annulus_reduction_bound(&net, &c, ac.i0, ac.imax)?;
            let report = json!({
                "stamp": ctx.stamp(),
                "kind": kind,
                "coarse_total": series.coarse_total(),
                "sharp_total": series.sharp_total(),
                "reduction_bound": bound.total,
                "loglog_fit": series.loglog_fit,
                "log_fit": series.log_fit,
                "terms": series.terms,
            });
            ctx.write_json(&format!("series_{}.json", kind_name(*kind)), &report)?;
        }

        if let Some(pc) = &cfg.analysis.recurrence_profile {
            let (start, rows) =
                recurrence_profile(&net, &center, &pc.n_grid, pc.replicas, ctx.seed)?;
            let mut w = ctx.writer(&format!("profile_{}.ndjson", kind_name(*kind)))?;
            writeln!(
                w,
                "{}",
                json!({"type": "header", "kind": kind, "start": start, "stamp": ctx.stamp()})
            )?;
            for row in &rows {
                writeln!(w, "{}", serde_json::to_string(row)?)?;
            }
        }
    }

    if let Some(ec) = &cfg.analysis.envelopes {
        if cfg.window.dim == 2 {
            let constants = envelope_constants(ctx, ec)?;
            let rows = envelope_frequencies(ctx, ec, constants)?;
            let report = json!({
                "stamp": ctx.stamp(),
                "c1": constants.c1,
                "c2": constants.c2,
                "replicas": ec.replicas,
                "rows": rows,
            });
            ctx.write_json("envelopes.json", &report)?;
        }
    }

    if let Some(gb) = &cfg.analysis.good_boxes {
        // paths and the embedding network live on the trimmed graph: the
        // construction is interior to the boxes, and untrimmed skeletons
        // carry hull artifacts with unbounded edge lengths
        let (mut field, path_graph) = match gb.variant {
            BoxVariant::Vs => {
                let vs = voronoi_skeleton(&tri, &points.window);
                let vs = trim_to_analysis_region(&vs, &tri, &points.window)?;
                let field = classify_boxes(&points, gb, Some((&tri, &vs)))?;
                (field, vs)
            }
            BoxVariant::Gabriel => {
                let gab = gabriel(&points, &tri)?;
                (classify_boxes(&points, gb, None)?, gab)
            }
        };
        let mut demoted = 0;
        if gb.build_paths {
            demoted = match gb.variant {
                BoxVariant::Vs => build_all_box_paths(
                    &points, &mut field, gb.variant, &tri, Some(&path_graph), None,
                )?,
                BoxVariant::Gabriel => build_all_box_paths(
                    &points, &mut field, gb.variant, &tri, None, Some(&path_graph),
                )?,
            };
            let net = assign_conductances(path_graph, cfg.conductance)?;
            let report = verify_rough_embedding(&field, &net)?;
            let beta_bound = (2 * cfg.window.dim) as u64;
            ctx.write_json(
                "rough_embedding.json",
                &json!({
                    "stamp": ctx.stamp(),
                    "alpha": report.alpha,
                    "beta": report.beta,
                    "beta_bound": beta_bound,
                    "pairs": report.pairs,
                    "demoted": demoted,
                }),
            )?;
            if report.beta > beta_bound || demoted > 0 {
                exit = EXIT_COUNTEREXAMPLE;
            }
        }
        let mut w = ctx.writer("boxes.ndjson")?;
        write_boxfield_ndjson(&field, &ctx.stamp(), &mut w)?;
        println!(
            "boxes: {} good of {}{}",
            field.good_count(),
            field.num_boxes(),
            if gb.build_paths { format!(", {} paths, {demoted} demoted", field.paths.len()) } else { String::new() }
        );
    }

    if let Some(ac) = &cfg.analysis.assumptions {
        let _ = ac;
        cmd_verify_assumptions(ctx)?;
    }

    println!("run complete: outputs in {}", ctx.out_dir.display());
    Ok(exit)
}
