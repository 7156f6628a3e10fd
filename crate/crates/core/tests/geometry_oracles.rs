//! Geometry correctness against independent oracles: brute-force
//! empty-circumsphere enumeration, the bisector-interval Voronoi-adjacency
//! scan, planarity counting, and stability of trimming under sample
//! enlargement.

#![allow(clippy::needless_range_loop)]

mod support;

use std::collections::HashSet;

use geowalk_core::geometry::{
    delaunay_graph, gabriel, trim_to_analysis_region, trim_with_trust_region, voronoi_skeleton,
    Triangulation,
};
use geowalk_core::point_process::{sample_ppp, Window};
use geowalk_core::rng::substream_rng;
use proptest::prelude::*;
use rand::Rng;
use support::*;

#[test]
fn delaunay_2d_matches_brute_force_on_small_instances() {
    for seed in 0..40u64 {
        let mut rng = substream_rng(seed, 1);
        let n = 3 + (rng.random::<u64>() as usize) % 8; // 3..=10
        let ps = random_points(2, n, 6.0, seed);
        let tri = match Triangulation::build(&ps) {
            Ok(t) => t,
            Err(_) => continue, // degenerate random draw (measure zero)
        };
        assert_eq!(cells_as_sets(&tri), brute_force_delaunay_2d(&ps), "seed {seed}");
    }
}

#[test]
fn delaunay_3d_matches_brute_force_on_small_instances() {
    for seed in 0..25u64 {
        let mut rng = substream_rng(seed, 2);
        let n = 4 + (rng.random::<u64>() as usize) % 5; // 4..=8
        let ps = random_points(3, n, 4.0, seed + 1000);
        let tri = match Triangulation::build(&ps) {
            Ok(t) => t,
            Err(_) => continue,
        };
        assert_eq!(cells_as_sets(&tri), brute_force_delaunay_3d(&ps), "seed {seed}");
    }
}

#[test]
fn perturbed_grid_matches_voronoi_dual_oracle() {
    // 3x3 grid with deterministic perturbations
    let mut rng = substream_rng(5, 3);
    let mut coords = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            coords.push(i as f64 + 0.2 * (rng.random::<f64>() - 0.5));
            coords.push(j as f64 + 0.2 * (rng.random::<f64>() - 0.5));
        }
    }
    let ps = pointset(2, coords);
    let tri = Triangulation::build(&ps).unwrap();
    let dt_edges: HashSet<(usize, usize)> = tri.edges().into_iter().collect();
    let dual = voronoi_dual_edges_2d(&ps);
    assert_eq!(dt_edges, dual);
}

#[test]
fn empty_circumsphere_brute_force_medium_sample() {
    let window = Window::cube(2, 14.0, 0.0).unwrap();
    let ps = sample_ppp(&window, 1.0, 12).unwrap();
    assert!(ps.len() <= 250 && ps.len() > 100);
    let tri = Triangulation::build(&ps).unwrap();
    assert!(tri.verify_empty_circumspheres());
}

#[test]
fn gabriel_subset_and_vs_degrees_on_small_instances() {
    let mut interior_checked = 0usize;
    for seed in 0..30u64 {
        let ps = random_points(2, 10, 6.0, seed + 300);
        let tri = match Triangulation::build(&ps) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let dt_edges: HashSet<(usize, usize)> = tri.edges().into_iter().collect();
        let gab = gabriel(&ps, &tri).unwrap();
        assert!(gab.edges.iter().all(|e| dt_edges.contains(&(e.u, e.v))));
        let vs = voronoi_skeleton(&tri, &ps.window);
        let hull = vs.hull_vertex.as_ref().unwrap();
        for v in 0..vs.num_vertices() {
            if !hull[v] {
                assert_eq!(vs.degree_of(v), 3);
                interior_checked += 1;
            }
        }
    }
    assert!(interior_checked > 0, "no interior skeleton vertices were exercised");
}

#[test]
fn planar_euler_bound_on_trimmed_delaunay() {
    for seed in 0..20u64 {
        let window = Window::cube(2, 14.0, 4.0).unwrap();
        let ps = sample_ppp(&window, 1.0, seed).unwrap();
        let tri = Triangulation::build(&ps).unwrap();
        let dt = delaunay_graph(&tri, &ps.window);
        let trimmed = trim_to_analysis_region(&dt, &tri, &ps.window).unwrap();
        let v = trimmed.active.iter().filter(|&&a| a).count();
        let e = trimmed.edges.len();
        assert!(v >= 3);
        assert!(e <= 3 * v - 6, "seed {seed}: {e} edges vs {v} vertices");
    }
}

#[test]
fn trim_is_stable_under_sample_enlargement() {
    // The trusted (trimmed) edge set over a region is a function of the
    // sample restricted to that region: building from a larger coupled
    // sample and trimming against the same trust region gives the same
    // edges.
    for seed in 0..20u64 {
        let analysis = Window::cube(2, 20.0, 5.0).unwrap();
        let big_window = Window::cube(2, 20.0, 10.0).unwrap();
        let big = sample_ppp(&big_window, 1.0, seed).unwrap();
        let small = big.restricted_to(&analysis);

        let tri_small = Triangulation::build(&small).unwrap();
        let dt_small = delaunay_graph(&tri_small, &small.window);
        let trimmed_small =
            trim_to_analysis_region(&dt_small, &tri_small, &analysis).unwrap();

        let tri_big = Triangulation::build(&big).unwrap();
        let dt_big = delaunay_graph(&tri_big, &big.window);
        let trust = analysis.extended();
        let trimmed_big =
            trim_with_trust_region(&dt_big, &tri_big, &analysis, &trust).unwrap();

        let coords_of = |ps: &geowalk_core::point_process::PointSet, v: usize| -> [u64; 2] {
            let p = ps.point(v);
            [p[0].to_bits(), p[1].to_bits()]
        };
        let set_small: HashSet<([u64; 2], [u64; 2])> = trimmed_small
            .edges
            .iter()
            .map(|e| (coords_of(&small, e.u), coords_of(&small, e.v)))
            .collect();
        let set_big: HashSet<([u64; 2], [u64; 2])> = trimmed_big
            .edges
            .iter()
            .map(|e| (coords_of(&big, e.u), coords_of(&big, e.v)))
            .collect();
        assert_eq!(set_small, set_big, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random small point clouds: the Gabriel graph is always a subgraph of
    /// the Delaunay graph and the empty-circumsphere audit passes exactly.
    #[test]
    fn prop_gabriel_subset_and_exact_delaunay(
        coords in prop::collection::vec(-5.0f64..5.0, 8..28)
    ) {
        let coords = if coords.len() % 2 == 1 { coords[..coords.len()-1].to_vec() } else { coords };
        let ps = pointset(2, coords);
        if let Ok(tri) = Triangulation::build(&ps) {
            prop_assert!(tri.verify_empty_circumspheres());
            let dt_edges: HashSet<(usize, usize)> = tri.edges().into_iter().collect();
            let gab = gabriel(&ps, &tri).unwrap();
            for e in &gab.edges {
                prop_assert!(dt_edges.contains(&(e.u, e.v)));
            }
        }
    }
}

#[test]
fn vs_edges_are_in_bijection_with_interior_facets() {
    let window = Window::cube(2, 10.0, 0.0).unwrap();
    let ps = sample_ppp(&window, 1.0, 44).unwrap();
    let tri = Triangulation::build(&ps).unwrap();
    let vs = voronoi_skeleton(&tri, &ps.window);
    let mut interior_facets = 0usize;
    for c in 0..tri.num_cells() {
        for &nb in tri.cell_neighbors(c) {
            if nb != geowalk_core::geometry::HULL {
                interior_facets += 1;
            }
        }
    }
    // each interior facet is counted from both sides
    assert_eq!(vs.edges.len() * 2, interior_facets);
}

#[test]
fn gabriel_rejects_mismatched_point_set() {
    let a = random_points(2, 12, 5.0, 1);
    let b = random_points(2, 12, 5.0, 2);
    let tri = Triangulation::build(&a).unwrap();
    assert!(matches!(
        gabriel(&b, &tri),
        Err(geowalk_core::Error::Usage(_))
    ));
}

#[test]
fn planar_triangulation_satisfies_euler_relations() {
    // with h hull vertices among v total: e = 3(v-1) - h, f = 2(v-1) - h
    for seed in 0..25u64 {
        let window = Window::cube(2, 8.0, 0.0).unwrap();
        let ps = sample_ppp(&window, 1.0, substream_rng(seed, 0).random::<u64>() % 10_000).unwrap();
        if ps.len() < 3 {
            continue;
        }
        let tri = match Triangulation::build(&ps) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let v = tri.num_points();
        let f = tri.num_cells();
        let e = tri.edges().len();
        let mut hull_verts = HashSet::new();
        for c in 0..tri.num_cells() {
            let vs = tri.cell(c);
            for (slot, &n) in tri.cell_neighbors(c).iter().enumerate() {
                if n == geowalk_core::geometry::HULL {
                    for (i, &vv) in vs.iter().enumerate() {
                        if i != slot {
                            hull_verts.insert(vv);
                        }
                    }
                }
            }
        }
        let h = hull_verts.len();
        assert_eq!(e, 3 * (v - 1) - h, "seed {seed}: v={v} e={e} h={h}");
        assert_eq!(f, 2 * (v - 1) - h, "seed {seed}: v={v} f={f} h={h}");
    }
}
