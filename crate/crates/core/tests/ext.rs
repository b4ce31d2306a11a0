mod common;

use common::{brute_force_opt, random_graph, small_weight_graph};
use congest_routing::ext::diameter::{approx_diameter, DiameterOptions};
use congest_routing::ext::gsf::{
    gsf_centralized, gsf_opt, gsf_solve, gsf_verify, terminal_opt, GsfInstance, GsfOptions, TerminalMetric,
};
use congest_routing::ext::sketch::{build_sketches, SketchOptions};
use congest_routing::generate::{generate, lb_diameter, Family};
use congest_routing::oracle::{metrics, DistanceMatrix};
use congest_routing::sim::SimConfig;
use congest_routing::{NodeId, Weight, WeightedGraph};
use proptest::prelude::*;

fn check_sketches(g: &WeightedGraph, k: usize, seed: u64) {
    let oracle = DistanceMatrix::new(g);
    let opts = SketchOptions { seed, ..Default::default() };
    let sk = build_sketches(g, k, &SimConfig::for_graph(g), &oracle, opts).unwrap();
    let bound = sk.stretch_bound();
    for v in g.nodes() {
        for w in g.nodes() {
            let (exact, est) = (oracle.get(v, w), sk.estimate(v, w));
            assert!(exact <= est && est <= bound * exact, "{v} {w}: {est} vs {exact}");
        }
        let (y, dy) = sk.label(v).stages[k];
        for s in sk.members(k) {
            let wdp = sk.wd_prime(v, s);
            assert!(oracle.get(v, s) <= wdp);
            assert!(wdp <= dy + (2 * k as u64 - 1) * oracle.get(y, s));
        }
    }
}

#[test]
fn sketches_k1_random_64() {
    check_sketches(&random_graph(64, 11), 1, 3);
}

#[test]
fn sketches_k2_and_k3() {
    check_sketches(&random_graph(80, 12), 2, 4);
    check_sketches(&small_weight_graph(64, 13, 5), 3, 5);
}

#[test]
fn sketches_on_grid() {
    let g = generate(&Family::Grid { rows: 6, cols: 8, max_weight: 9 }, 2).unwrap();
    check_sketches(&g, 2, 6);
}

fn check_diameter(g: &WeightedGraph, k: usize, seed: u64) {
    let oracle = DistanceMatrix::new(g);
    let wd = metrics(g).wd;
    let opts = DiameterOptions { seed, ..Default::default() };
    let d = approx_diameter(g, k, &SimConfig::for_graph(g), Some(&oracle), &opts).unwrap();
    assert!(wd <= d.estimate && d.estimate <= (2 * k as u64 + 1) * wd, "{} vs {wd}", d.estimate);
    assert!(d.spanner_diameter <= d.estimate);
}

#[test]
fn diameter_sandwich_random() {
    for k in 1..=3 {
        check_diameter(&random_graph(64, 20 + k as u64), k, k as u64);
    }
}

#[test]
fn diameter_sandwich_lower_bound_family() {
    for (m, a, b) in [(3, vec![], vec![]), (4, vec![1, 3], vec![2]), (4, vec![2], vec![2, 4])] {
        let g = lb_diameter(m, 16, &a, &b).unwrap();
        for k in 1..=3 {
            check_diameter(&g, k, 7);
        }
    }
}

fn small_instance(n: usize, seed: u64, picks: &[(usize, u32)]) -> (WeightedGraph, GsfInstance) {
    let g = generate(&Family::RandomWeighted { n, p: Some(0.3), max_weight: Some(20) }, seed).unwrap();
    let mut terminals: Vec<(NodeId, u32)> = picks.iter().map(|&(x, c)| (NodeId::from_index(x % n), c)).collect();
    terminals.sort();
    terminals.dedup_by_key(|t| t.0);
    (g, GsfInstance::new(n, terminals).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gsf_feasible_and_within_factor(
        n in 5usize..=9,
        seed in 0u64..1000,
        picks in prop::collection::vec((0usize..9, 0u32..3), 1..=6),
        k in 1usize..=2,
    ) {
        let (g, inst) = small_instance(n, seed, &picks);
        prop_assume!(g.m() <= 18);
        let oracle = DistanceMatrix::new(&g);
        let cfg = SimConfig::for_graph(&g);
        let sol = gsf_solve(&g, &inst, k, &cfg, GsfOptions { seed, ..Default::default() }).unwrap();
        prop_assert!(sol.feasible);
        let opt = brute_force_opt(&g, &inst);
        prop_assert_eq!(gsf_opt(&inst, &oracle).unwrap(), opt);
        let report = gsf_verify(&g, &inst, &sol.edges, k, 2, Some(&oracle)).unwrap();
        prop_assert!(report.ok, "weight {} opt {opt} k {k}", sol.weight);
        // the terminal graph with exact distances loses at most a factor 2
        let exact = TerminalMetric::new(&inst, |a, b| oracle.get(a, b));
        let topt = terminal_opt(&exact).unwrap();
        prop_assert!(opt <= topt && topt <= 2 * opt);
        let chosen = gsf_centralized(&exact);
        let w: Weight = chosen.iter().map(|&(a, b)| oracle.get(a, b)).sum();
        prop_assert!(w <= 2 * topt);
    }
}

#[test]
fn gsf_adjacent_pair() {
    let g = WeightedGraph::new(3, [(1, 2, 1), (2, 3, 5)]).unwrap();
    let inst = GsfInstance::new(3, vec![(NodeId(1), 0), (NodeId(2), 0)]).unwrap();
    let sol = gsf_solve(&g, &inst, 1, &SimConfig::for_graph(&g), GsfOptions::default()).unwrap();
    assert_eq!(sol.edges, vec![(NodeId(1), NodeId(2))]);
    assert_eq!((sol.weight, brute_force_opt(&g, &inst)), (1, 1));
}

#[test]
fn gsf_on_larger_random_graph() {
    let g = random_graph(64, 30);
    let terminals = (0..8).map(|i| (NodeId(1 + 7 * i), i % 3)).collect();
    let inst = GsfInstance::new(64, terminals).unwrap();
    let sol = gsf_solve(&g, &inst, 2, &SimConfig::for_graph(&g), GsfOptions::default()).unwrap();
    assert!(sol.feasible);
    let spanner_weight: Weight = sol.metric_edges.iter().map(|e| e.2).sum();
    assert!(sol.weight <= spanner_weight);
}
