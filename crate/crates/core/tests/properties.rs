use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covertime::bounds::{aldous_upper, avg_degree_genus_bound, main_upper, main_upper_expanded};
use covertime::corpus::random_connected;
use covertime::exact::{
    exact_cover_time, hitting_from_resistance, matthews_bounds, max_relative_gap,
    resistance_triangle_excess, triangle_equation_residual, verify_commute_resistance, WalkTables,
};
use covertime::graph::{
    complete, dirichlet_energy, lollipop, path, skeleton, torus_grid, tree_plus_k5, validate,
    Graph, VertexFunction,
};
use covertime::mc::{estimate_cover_time, first_visits, McConfig, Start};
use covertime::packing::{angle_sums, layout, solve_radii, solve_radii_from, tangency_residual};
use covertime::proof_lab::{
    dirichlet_lower_bound, extract_separated_subset, log_cutoff_function, CutoffLevels,
    PackedConfiguration,
};
use covertime::surface::{
    branch_point_budget, connected_sum, hex_refine, riemann_hurwitz_residual, tetrahedron,
    triangular_torus, CoveringLedger, Triangulation,
};

fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0.0..0.5f64, any::<u64>())
        .prop_map(|(n, p, seed)| random_connected(n, p, seed).unwrap())
}

/// Inserts a vertex inside face `face`, joined to its three corners.
fn stellar_split(tri: &Triangulation, face: usize) -> Triangulation {
    let x = tri.n();
    let mut faces = tri.faces().to_vec();
    let [a, b, c] = faces.swap_remove(face);
    faces.extend([[a, b, x], [b, c, x], [c, a, x]]);
    Triangulation::new(x + 1, faces).unwrap()
}

/// Triangular tori with a few stellar splits, so radii are not all equal.
fn torus_triangulation() -> impl Strategy<Value = Triangulation> {
    (
        3usize..=6,
        prop::collection::vec(any::<prop::sample::Index>(), 0..4),
    )
        .prop_map(|(k, splits)| {
            splits.iter().fold(triangular_torus(k).unwrap(), |t, i| {
                let f = i.index(t.faces().len());
                stellar_split(&t, f)
            })
        })
}

fn surface(max_genus: u32) -> impl Strategy<Value = Triangulation> {
    (0..=max_genus, 3usize..=5, 0usize..=1).prop_map(|(g, k, refinements)| {
        let piece = triangular_torus(k).unwrap();
        let mut t = if g == 0 { tetrahedron() } else { piece.clone() };
        for _ in 1..g {
            t = connected_sum(&t, &piece);
        }
        (0..refinements).fold(t, |t, _| hex_refine(&t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_simple_and_connected(n in 2usize..40, k in 3usize..12, c in 3usize..8, l in 1usize..8, g in 1usize..4) {
        let mut graphs = vec![path(n).unwrap(), complete(n).unwrap(), torus_grid(k).unwrap(), lollipop(c, l).unwrap()];
        graphs.extend(tree_plus_k5(n + 8 * g, g));
        for graph in &graphs {
            let report = validate(graph);
            prop_assert!(report.simple && report.connected, "{report:?}");
        }
    }

    #[test]
    fn energy_shift_and_scale(graph in connected_graph(20), seed in any::<u64>(), shift in -10.0..10.0f64, scale in -5.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..graph.n()).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
        let base = dirichlet_energy(&graph, &VertexFunction::new(values.clone()).unwrap()).unwrap();
        let shifted = VertexFunction::new(values.iter().map(|x| x + shift).collect()).unwrap();
        let scaled = VertexFunction::new(values.iter().map(|x| x * scale).collect()).unwrap();
        prop_assert!((dirichlet_energy(&graph, &shifted).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
        let e = dirichlet_energy(&graph, &scaled).unwrap();
        prop_assert!((e - scale * scale * base).abs() <= 1e-9 * (1.0 + e));
    }

    #[test]
    fn torus_grid_is_four_regular(k in 3usize..30) {
        prop_assert!(torus_grid(k).unwrap().degrees().iter().all(|&d| d == 4));
    }

    #[test]
    fn tree_plus_k5_has_g_k5_blocks(g in 1usize..6, extra in 0usize..20) {
        // enough tree vertices for g leaves
        let graph = tree_plus_k5(4 * g + 2 * g + extra, g).unwrap();
        let k5: Vec<_> = graph
            .blocks()
            .into_iter()
            .filter(|b| b.len() == 5 && b.iter().all(|&u| b.iter().all(|&v| u == v || graph.has_edge(u, v))))
            .collect();
        prop_assert_eq!(k5.len(), g);
        prop_assert_eq!(graph.genus_hint(), Some(g as u32));
    }

    #[test]
    fn hex_refine_counts_and_genus(t in surface(3)) {
        let before = t.counts();
        let r = hex_refine(&t);
        let after = r.counts();
        prop_assert_eq!(after.vertices, before.vertices + before.edges);
        prop_assert_eq!(after.edges, 2 * before.edges + 3 * before.faces);
        prop_assert_eq!(after.faces, 4 * before.faces);
        prop_assert_eq!(r.genus(), t.genus());
        let max_before = t.face_degrees().into_iter().max().unwrap();
        prop_assert_eq!(r.face_degrees().into_iter().max().unwrap(), max_before.max(6));
    }

    #[test]
    fn triangulation_edge_count(t in surface(4)) {
        let c = t.counts();
        prop_assert_eq!(2 * c.edges, 3 * c.faces);
        prop_assert_eq!(c.edges as i64, 3 * c.vertices as i64 + 6 * t.genus() as i64 - 6);
    }

    #[test]
    fn skeleton_average_degree_within_genus_bound(t in surface(4)) {
        let g = skeleton(&t);
        let genus = t.genus() as i64;
        // 2|E| ≤ 6n + 12(g−1), compared in integers
        prop_assert!(2 * g.edge_count() as i64 <= 6 * g.n() as i64 + 12 * (genus - 1));
        let bound = avg_degree_genus_bound(g.n() as f64, genus as f64).unwrap();
        prop_assert!(g.avg_degree() <= bound * (1.0 + 1e-15));
    }

    #[test]
    fn consistent_ledgers_respect_budget(g1 in 0u32..60, g2 in 0u32..3, deg in 1u32..40, seed in any::<u64>()) {
        let total = deg as i64 * (2 - 2 * g2 as i64) - (2 - 2 * g1 as i64);
        prop_assume!(total == 0 || (total > 0 && deg >= 2));
        // split the required ramification into fibers [e, 1, ..., 1]
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut left = total;
        let mut fibers = Vec::new();
        while left > 0 {
            let e = rand::Rng::random_range(&mut rng, 2..=deg).min(left as u32 + 1);
            let mut fiber = vec![e];
            fiber.extend(std::iter::repeat_n(1, (deg - e) as usize));
            fibers.push(fiber);
            left -= e as i64 - 1;
        }
        let ledger = CoveringLedger::new(g1, g2, deg, fibers).unwrap();
        prop_assert_eq!(riemann_hurwitz_residual(&ledger), 0);
        if deg <= g1 + 1 {
            prop_assert!(ledger.ramification_sum() <= 4 * g1 as i64);
        }
        let b = branch_point_budget(g1, deg);
        prop_assert_eq!(b.ramification, 2 * deg as i64 - (2 - 2 * g1 as i64));
        prop_assert_eq!(b.degree_within_bound, b.warning.is_none());
    }

    #[test]
    fn walk_identities(graph in connected_graph(30)) {
        let t = WalkTables::compute(&graph).unwrap();
        prop_assert!(triangle_equation_residual(&t.d) <= 1e-9);
        prop_assert!(resistance_triangle_excess(&t.r) <= 1e-9);
        prop_assert!(verify_commute_resistance(&graph, &t.c, &t.r).max_rel <= 1e-8);
        prop_assert!(max_relative_gap(&hitting_from_resistance(&graph, &t.r), &t.h) <= 1e-8);
    }

    #[test]
    fn matthews_and_aldous_bracket_exact(graph in connected_graph(9)) {
        let h = WalkTables::compute(&graph).unwrap().h;
        let all: Vec<usize> = (0..graph.n()).collect();
        let b = matthews_bounds(&h, &all).unwrap();
        let cover = exact_cover_time(&graph).unwrap().cover_time;
        let slack = 1e-9 * (1.0 + cover);
        prop_assert!(b.lower <= cover + slack && cover <= b.upper + slack);
        prop_assert!(cover <= aldous_upper(&graph).unwrap() + slack);
    }

    #[test]
    fn cover_time_is_relabeling_equivariant(graph in connected_graph(8), perm_seed in any::<u64>()) {
        let n = graph.n();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(perm_seed));
        let relabeled = Graph::new(n, graph.edges().iter().map(|&(u, v)| (perm[u], perm[v]))).unwrap();
        let a = exact_cover_time(&graph).unwrap();
        let b = exact_cover_time(&relabeled).unwrap();
        for (v, &pv) in perm.iter().enumerate() {
            prop_assert!((a.per_start[v] - b.per_start[pv]).abs() <= 1e-9 * (1.0 + a.per_start[v]));
        }
    }

    #[test]
    fn first_visits_are_monotone(graph in connected_graph(25), seed in any::<u64>(), start in any::<prop::sample::Index>()) {
        let s = start.index(graph.n());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let visits = first_visits(&graph, s, 10_000_000, &mut rng).unwrap();
        prop_assert_eq!(visits.len(), graph.n());
        prop_assert!(visits.windows(2).all(|w| w[0].0 < w[1].0));
        let mut seen: Vec<usize> = visits.iter().map(|&(_, v)| v).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..graph.n()).collect::<Vec<_>>());
    }

    #[test]
    fn mc_is_deterministic(graph in connected_graph(10), seed in any::<u64>()) {
        let cfg = McConfig::new(seed, 200, Start::Worst, McConfig::default_max_steps(graph.n()));
        let a = serde_json::to_string(&estimate_cover_time(&graph, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&estimate_cover_time(&graph, &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn main_upper_forms_agree(n in 2u32..=10_000, g in 0u32..=100) {
        let (n, g) = (n as f64, g as f64);
        let a = main_upper(n, g).unwrap();
        let b = main_upper_expanded(n, g);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

}
#[test]
fn exact_within_genus_upper() {
    for graph in [
        torus_grid(3).unwrap(),
        tree_plus_k5(7, 1).unwrap(),
        tree_plus_k5(11, 2).unwrap(),
    ] {
        let cover = exact_cover_time(&graph).unwrap().cover_time;
        let genus = graph.genus_hint().unwrap() as f64;
        assert!(cover <= main_upper(graph.n() as f64, genus).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn torus_angle_excess_vanishes(t in torus_triangulation(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radii: Vec<f64> = (0..t.n()).map(|_| rand::Rng::random_range(&mut rng, 0.1..10.0)).collect();
        let excess: f64 = angle_sums(&t, &radii).iter().map(|s| s - std::f64::consts::TAU).sum();
        prop_assert!(excess.abs() <= 1e-9);
    }

    #[test]
    fn packing_converges_and_is_unique(t in torus_triangulation(), seed in any::<u64>()) {
        let a = solve_radii(&t, 1e-10).unwrap();
        prop_assert!(a.angle_residual <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = (0..t.n()).map(|_| rand::Rng::random_range(&mut rng, 0.1..10.0)).collect();
        let b = solve_radii_from(&t, 1e-10, init).unwrap();
        for (x, y) in a.radii.iter().zip(&b.radii) {
            prop_assert!((x - y).abs() <= 1e-6 * x);
        }
        let lay = layout(&t, &a.radii).unwrap();
        prop_assert!(lay.tangency_residual <= 1e-7);
        // moving all centers by a period gives the same packing
        let shift = [lay.lattice[0][0] - 2.0 * lay.lattice[1][0], lay.lattice[0][1] - 2.0 * lay.lattice[1][1]];
        let moved: Vec<_> = lay.centers.iter().map(|c| [c[0] + shift[0], c[1] + shift[1]]).collect();
        prop_assert!(tangency_residual(&t.edges(), &a.radii, &moved, &lay.lattice) <= 1e-7);
        // scaling all radii leaves every angle unchanged
        let scaled: Vec<f64> = a.radii.iter().map(|r| 3.5 * r).collect();
        for (x, y) in angle_sums(&t, &a.radii).iter().zip(angle_sums(&t, &scaled)) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn certificates_never_exceed_resistance(graph in connected_graph(50), seed in any::<u64>()) {
        let r = WalkTables::compute(&graph).unwrap().r;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = graph.n();
        for _ in 0..5 {
            let u = rand::Rng::random_range(&mut rng, 0..n);
            let w = (u + rand::Rng::random_range(&mut rng, 1..n)) % n;
            let values: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let f = VertexFunction::new(values.clone()).unwrap();
            let cert = dirichlet_lower_bound(&graph, &f, u, w).unwrap();
            prop_assert!(cert.bound <= r[(u, w)] + 1e-9);
            let shifted = VertexFunction::new(values.iter().map(|x| x + 2.5).collect()).unwrap();
            let again = dirichlet_lower_bound(&graph, &shifted, u, w).unwrap();
            prop_assert!((again.bound - cert.bound).abs() <= 1e-9 * (1.0 + cert.bound));
        }
    }

    #[test]
    fn log_cutoff_range(k in 6usize..20, eps in 0.01..0.5f64, w in any::<prop::sample::Index>()) {
        let graph = torus_grid(k).unwrap();
        let packing = covertime::packing::grid_torus_packing(k).unwrap();
        let cfg = PackedConfiguration::from_packing_around(&packing, 0, 1, eps).unwrap();
        let target = 1 + w.index(graph.n() - 1);
        match log_cutoff_function(&graph, &cfg, 0, target, CutoffLevels::default()) {
            Ok(cut) => {
                let lo = cut.a.min(cut.c);
                prop_assert!(cut.g.values().iter().all(|&x| x >= lo && x <= cut.b));
                prop_assert_eq!(cut.g[0], cut.a);
                prop_assert_eq!(cut.g[target], cut.b);
            }
            // targets too close to 0 leave no room for c
            Err(e) => prop_assert!(e.to_string().contains("a + 2δ̃ < c < b")),
        }
    }

    #[test]
    fn extraction_is_separated_maximal_and_bounded(
        points in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, -3.0..-1.0f64), 1..150),
        s in 0.05..0.45f64,
        eps in 0.01..1.0f64,
    ) {
        let cfg = PackedConfiguration::new(
            points.iter().map(|&(x, y, _)| [x, y]).collect(),
            points.iter().map(|&(_, _, e)| 10f64.powf(e)).collect(),
            0,
            eps,
        )
        .unwrap();
        let all: Vec<usize> = (0..cfg.len()).collect();
        let ex = extract_separated_subset(&cfg, &all, s).unwrap();
        let d = |a: usize, b: usize| (cfg.points[a][0] - cfg.points[b][0]).hypot(cfg.points[a][1] - cfg.points[b][1]);
        prop_assert!(ex.bounds_hold());
        prop_assert_eq!(ex.bins.iter().map(|b| b.members.len()).sum::<usize>(), cfg.len());
        for bin in &ex.bins {
            for (i, &a) in bin.selected.iter().enumerate() {
                prop_assert!(bin.selected[i + 1..].iter().all(|&b| d(a, b) >= bin.separation));
            }
            for &v in bin.members.iter().filter(|v| !bin.selected.contains(v)) {
                prop_assert!(bin.selected.iter().any(|&z| d(v, z) < bin.separation));
            }
            for &v in &bin.members {
                let r = cfg.radii[v];
                prop_assert!(bin.radius_range.0 < r * (1.0 + 1e-12) && r <= bin.radius_range.1 * (1.0 + 1e-12));
            }
        }
        let chosen: usize = ex.bins.iter().filter(|b| b.chosen).map(|b| b.members.len()).sum();
        prop_assert!(2 * chosen >= cfg.len());
    }
}
