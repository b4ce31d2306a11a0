mod common;

use common::random_graph;
use congest_routing::oracle::DistanceMatrix;
use congest_routing::routing::tight::{assign_tight_labels, tight_route};
use congest_routing::routing::{build_tables, decide, parse_alpha, RoutingOptions};
use congest_routing::sim::SimConfig;
use congest_routing::WeightedGraph;

fn check_all_pairs(g: &WeightedGraph, alpha: &str, seed: u64) {
    let oracle = DistanceMatrix::new(g);
    let cfg = SimConfig::for_graph(g);
    let opts = RoutingOptions { seed, ..Default::default() };
    let rt = build_tables(g, parse_alpha(alpha).unwrap(), &cfg, &oracle, opts).unwrap();
    let rho = rt.params.stretch();
    for v in g.nodes() {
        let table = rt.table(v);
        for w in g.nodes() {
            let exact = oracle.get(v, w);
            let res = rt.route(g, v, w).unwrap();
            assert_eq!(*res.path.last().unwrap(), w);
            assert!(res.weight <= res.estimate);
            assert!(exact <= res.estimate && res.estimate <= rho * exact, "{v} -> {w}");
            // statelessness: same inputs, same answer
            assert_eq!(decide(&table, rt.label(w)).unwrap(), decide(&table, rt.label(w)).unwrap());
        }
    }
    let tl = assign_tight_labels(g, &rt, &cfg).unwrap();
    assert!(tl.is_permutation());
    let bound = rt.params.tight_stretch();
    for v in g.nodes() {
        for w in g.nodes() {
            let res = tight_route(g, &rt, &tl, v, tl.label(w)).unwrap();
            assert_eq!(*res.path.last().unwrap(), w);
            assert!(res.weight <= bound * oracle.get(v, w));
        }
    }
}

#[test]
fn random_64_three_quarters() {
    check_all_pairs(&random_graph(64, 11), "0.75", 1);
}

#[test]
fn random_48_all_alphas() {
    for alpha in ["0.5", "0.6", "1"] {
        check_all_pairs(&random_graph(48, 4), alpha, 2);
    }
}

#[test]
fn grid_and_tree_families() {
    use congest_routing::generate::{generate, Family};
    let grid = generate(&Family::Grid { rows: 6, cols: 7, max_weight: 9 }, 3).unwrap();
    check_all_pairs(&grid, "0.75", 3);
    let tree = generate(&Family::Tree { n: 40, max_weight: 20 }, 5).unwrap();
    check_all_pairs(&tree, "1", 4);
}
