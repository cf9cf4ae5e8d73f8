use phid_core::netgraph::{
    detect_communities, force_layout, global_efficiency, modularity, shortest_path_lengths,
    GraphKind, HeadGraph, LayoutParams, Partition,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(n: usize, edges: &[(usize, usize, f64)]) -> HeadGraph {
    let mut w = vec![0.0; n * n];
    for &(i, j, v) in edges {
        w[i * n + j] = v;
        w[j * n + i] = v;
    }
    HeadGraph::from_matrix(n, w, GraphKind::Abstract).unwrap()
}

fn clique_edges(nodes: &[usize], w: f64) -> Vec<(usize, usize, f64)> {
    let mut e = Vec::new();
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a + 1..] {
            e.push((i, j, w));
        }
    }
    e
}

fn complete(n: usize) -> HeadGraph {
    graph(n, &clique_edges(&(0..n).collect::<Vec<_>>(), 1.0))
}

/// Double-sum modularity evaluated straight from the definition.
fn modularity_oracle(g: &HeadGraph, labels: &[usize]) -> f64 {
    let n = g.n();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).sum()).collect();
    let two_m: f64 = deg.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += g.weight(i, j) - deg[i] * deg[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition as a restricted growth string.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(&mut vec![0], 0, n, &mut out);
    }
    out
}

fn exhaustive_best(g: &HeadGraph) -> (f64, Vec<usize>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for p in all_partitions(g.n()) {
        let q = modularity_oracle(g, &p);
        if q > best.0 + 1e-12 {
            best = (q, p);
        }
    }
    best
}

#[test]
fn partition_enumeration_counts_bell_numbers() {
    let bell = [1, 2, 5, 15, 52, 203, 877, 4140];
    for (n, &b) in bell.iter().enumerate() {
        assert_eq!(all_partitions(n + 1).len(), b);
    }
}

#[test]
fn two_disjoint_k4_split_into_the_cliques() {
    let mut edges = clique_edges(&[0, 1, 2, 3], 1.0);
    edges.extend(clique_edges(&[4, 5, 6, 7], 1.0));
    let g = graph(8, &edges);
    let natural = [0, 0, 0, 0, 1, 1, 1, 1];
    assert!((modularity_oracle(&g, &natural) - 0.5).abs() < 1e-12);
    let (best_q, best) = exhaustive_best(&g);
    assert_eq!(Partition::from_labels(&best), Partition::from_labels(&natural));
    for seed in 0..5 {
        let p = detect_communities(&g, seed).unwrap();
        assert_eq!(p, Partition::from_labels(&natural));
        let q = modularity(&g, &p).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert!((q - best_q).abs() < 1e-12);
    }
}

#[test]
fn complete_uniform_graph_collapses_to_one_community() {
    // Merging singletons of K_n raises Q, and one community attains the maximum Q = 0.
    for n in 3..=7 {
        let g = complete(n);
        let (best_q, _) = exhaustive_best(&g);
        assert!(best_q.abs() < 1e-12);
        let p = detect_communities(&g, 1).unwrap();
        assert_eq!(p.count(), 1);
        assert!(modularity(&g, &p).unwrap().abs() < 1e-12);
        assert!(modularity(&g, &Partition::singletons(n)).unwrap() < 0.0);
    }
}

#[test]
fn single_community_modularity_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..9);
        let g = random_graph(&mut rng, n, 0.6);
        if g.is_empty() {
            continue;
        }
        assert!(modularity(&g, &Partition::single(n)).unwrap().abs() < 1e-12);
    }
}

fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> HeadGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push((i, j, rng.random_range(0.05..1.0)));
            }
        }
    }
    graph(n, &edges)
}

#[test]
fn detected_partitions_beat_the_trivial_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut wins = 0;
    let mut total = 0;
    while total < 100 {
        let n = rng.random_range(4..24);
        let g = random_graph(&mut rng, n, 0.3);
        if g.is_empty() {
            continue;
        }
        total += 1;
        let p = detect_communities(&g, total as u64).unwrap();
        let q = modularity(&g, &p).unwrap();
        assert!((q - modularity_oracle(&g, p.ids())).abs() < 1e-12);
        if q >= -1e-12 {
            wins += 1;
        }
    }
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn detection_matches_exhaustive_optimum_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut close = 0;
    for _ in 0..30 {
        let n = rng.random_range(4..8);
        let g = random_graph(&mut rng, n, 0.5);
        if g.is_empty() {
            close += 1;
            continue;
        }
        let (best_q, _) = exhaustive_best(&g);
        let q = modularity(&g, &detect_communities(&g, 0).unwrap()).unwrap();
        assert!(q <= best_q + 1e-12);
        if q >= best_q - 0.05 {
            close += 1;
        }
    }
    assert!(close >= 24, "{close}/30 within 0.05 of the optimum");
}

#[test]
fn detection_is_deterministic_and_contiguous() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = random_graph(&mut rng, 20, 0.3);
    let a = detect_communities(&g, 4).unwrap();
    assert_eq!(a, detect_communities(&g, 4).unwrap());
    let mut seen: Vec<usize> = a.ids().to_vec();
    seen.sort();
    seen.dedup();
    assert_eq!(seen, (0..a.count()).collect::<Vec<_>>());
}

#[test]
fn empty_graph_detection_is_an_error() {
    assert!(detect_communities(&graph(3, &[]), 0).is_err());
}

#[test]
fn complete_graph_efficiency_is_one() {
    assert_eq!(global_efficiency(&complete(12)).unwrap(), 1.0);
}

#[test]
fn path_efficiency_by_enumeration() {
    // Lengths 1, 1, 2 in both directions: (1 + 1 + 1/2) · 2 / 6.
    let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
    assert!((global_efficiency(&g).unwrap() - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn two_nodes_settle_at_the_ideal_distance_around_their_centroid() {
    let g = graph(2, &[(0, 1, 1.0)]);
    let params = LayoutParams::default();
    let start = force_layout(&g, &LayoutParams { iterations: 0, ..params }).unwrap();
    let end = force_layout(&g, &params).unwrap();
    let (c0, c1) = (start.centroid(&[0, 1]), end.centroid(&[0, 1]));
    assert!((c0[0] - c1[0]).abs() < 1e-6 && (c0[1] - c1[1]).abs() < 1e-6);
    // k²/d = d²/k at d = k.
    assert!((end.distance(0, 1) - end.k).abs() < 1e-3 * end.k);
}

#[test]
fn temperature_never_increases_and_positions_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_graph(&mut rng, 15, 0.4);
    let l = force_layout(&g, &LayoutParams::default()).unwrap();
    assert!(l.temperatures.windows(2).all(|w| w[1] <= w[0]));
    assert!(l.positions.iter().flatten().all(|v| v.is_finite()));
    assert_eq!(l.temperature, 0.0);
    assert_eq!(l, force_layout(&g, &LayoutParams::default()).unwrap());
}

#[test]
fn disconnected_components_drift_apart() {
    let mut edges = clique_edges(&[0, 1, 2, 3], 1.0);
    edges.extend(clique_edges(&[4, 5, 6, 7], 1.0));
    let g = graph(8, &edges);
    let l = force_layout(&g, &LayoutParams { seed: 17, ..LayoutParams::default() }).unwrap();
    let (a, b) = ([0, 1, 2, 3], [4, 5, 6, 7]);
    let (ca, cb) = (l.centroid(&a), l.centroid(&b));
    let between = (ca[0] - cb[0]).hypot(ca[1] - cb[1]);
    let mut within = Vec::new();
    for group in [&a, &b] {
        for (x, &i) in group.iter().enumerate() {
            for &j in &group[x + 1..] {
                within.push(l.distance(i, j));
            }
        }
    }
    let mean_within = within.iter().sum::<f64>() / within.len() as f64;
    assert!(between >= mean_within, "{between} < {mean_within}");
}

#[test]
fn triangle_clique_is_equilateral() {
    let g = complete(3);
    let l = force_layout(&g, &LayoutParams { seed: 3, ..LayoutParams::default() }).unwrap();
    let d = [l.distance(0, 1), l.distance(0, 2), l.distance(1, 2)];
    let (lo, hi) = (d.iter().cloned().fold(f64::MAX, f64::min), d.iter().cloned().fold(0.0, f64::max));
    assert!(hi / lo < 1.05, "{d:?}");
}

#[test]
fn four_clique_forms_a_square() {
    // Four equidistant points do not exist in the plane; the symmetric equilibrium is a square.
    let g = complete(4);
    let l = force_layout(&g, &LayoutParams { seed: 3, ..LayoutParams::default() }).unwrap();
    let mut d: Vec<f64> = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .map(|(i, j)| l.distance(i, j))
        .collect();
    d.sort_by(f64::total_cmp);
    let (sides, diagonals) = d.split_at(4);
    assert!(sides[3] / sides[0] < 1.05, "{d:?}");
    assert!(diagonals[1] / diagonals[0] < 1.05, "{d:?}");
    assert!((diagonals[0] / sides[0] - 2f64.sqrt()).abs() < 0.05 * 2f64.sqrt());
}

#[test]
fn layout_distance_ranking_survives_weight_scaling() {
    // Two triangles joined by one weak bridge: distances separate clearly.
    let mut edges = clique_edges(&[0, 1, 2], 1.0);
    edges.extend(clique_edges(&[3, 4, 5], 0.6));
    edges.push((2, 3, 0.2));
    let g = graph(6, &edges);
    let params = LayoutParams { seed: 8, ..LayoutParams::default() };
    let base = force_layout(&g, &params).unwrap();
    for s in [0.5, 2.0] {
        let scaled = force_layout(&g.scaled(s), &params).unwrap();
        let ratio = s.powf(-1.0 / 3.0);
        let n = g.n();
        for i in 0..n {
            for j in i + 1..n {
                for a in 0..n {
                    for b in a + 1..n {
                        let (x, y) = (base.distance(i, j), base.distance(a, b));
                        if (x - y).abs() > 0.05 * x.max(y) {
                            let (xs, ys) = (scaled.distance(i, j), scaled.distance(a, b));
                            assert_eq!(x < y, xs < ys, "pair order flipped at s = {s}");
                        }
                    }
                }
                let rel = scaled.distance(i, j) / base.distance(i, j) / ratio;
                assert!((rel - 1.0).abs() < 0.05, "s = {s}: distance ratio {rel}");
            }
        }
    }
}

fn arb_graph() -> impl Strategy<Value = HeadGraph> {
    (2usize..9).prop_flat_map(|n| {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.01f64..3.0], n * (n - 1) / 2).prop_map(
            move |upper| {
                let mut w = vec![0.0; n * n];
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        w[i * n + j] = upper[k];
                        w[j * n + i] = upper[k];
                        k += 1;
                    }
                }
                HeadGraph::from_matrix(n, w, GraphKind::Memory).unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn efficiency_is_monotone_in_weights(g in arb_graph(), pick in any::<prop::sample::Index>(), bump in 0.01f64..2.0) {
        let n = g.n();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let (i, j) = pairs[pick.index(pairs.len())];
        let mut w = g.weights().to_vec();
        w[i * n + j] += bump;
        w[j * n + i] += bump;
        let h = HeadGraph::from_matrix(n, w, GraphKind::Memory).unwrap();
        prop_assert!(global_efficiency(&h).unwrap() >= global_efficiency(&g).unwrap() - 1e-12);
    }

    #[test]
    fn efficiency_is_bounded_by_the_strongest_edge(g in arb_graph()) {
        let e = global_efficiency(&g).unwrap();
        let wmax = g.weights().iter().cloned().fold(0.0, f64::max);
        prop_assert!(e >= 0.0 && e <= wmax + 1e-12);
    }

    #[test]
    fn shortest_paths_obey_the_triangle_inequality(g in arb_graph()) {
        let n = g.n();
        let d = shortest_path_lengths(&g);
        for i in 0..n {
            prop_assert_eq!(d[i * n + i], 0.0);
            for j in 0..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.max(b), "{} vs {}", a, b);
                for k in 0..n {
                    let via = d[i * n + k] + d[k * n + j];
                    prop_assert!(d[i * n + j] <= via * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn modularity_stays_in_bounds(g in arb_graph(), labels in proptest::collection::vec(0usize..4, 8), seed in 0u64..100) {
        prop_assume!(!g.is_empty());
        let p = Partition::from_labels(&labels[..g.n()]);
        let q = modularity(&g, &p).unwrap();
        prop_assert!((-0.5 - 1e-12..=1.0).contains(&q), "Q = {}", q);
        prop_assert!((q - modularity_oracle(&g, p.ids())).abs() < 1e-12);
        let d = detect_communities(&g, seed).unwrap();
        let qd = modularity(&g, &d).unwrap();
        prop_assert!((-0.5 - 1e-12..=1.0).contains(&qd));
    }
}
