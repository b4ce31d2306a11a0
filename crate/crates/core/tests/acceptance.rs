//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{brute_force_opt, hop_bounded_rows, random_graph, random_skeleton, reference_bsp, reference_spanner, small_weight_graph};
use congest_routing::bfs::broadcast_all;
use congest_routing::bsp::{bsp, SourceAssignment};
use congest_routing::ext::diameter::{approx_diameter, DiameterOptions};
use congest_routing::ext::gsf::{gsf_opt, gsf_solve, gsf_verify, terminal_opt, GsfInstance, GsfOptions, TerminalMetric};
use congest_routing::ext::sample_nodes;
use congest_routing::ext::sketch::{build_sketches, SketchOptions};
use congest_routing::generate::{generate, lb_diameter, Family};
use congest_routing::oracle::{metrics, DistanceMatrix};
use congest_routing::routing::tight::{assign_tight_labels, tight_route};
use congest_routing::routing::{build_tables, parse_alpha, RoutingOptions};
use congest_routing::short_range::log2n;
use congest_routing::sim::{RoundTrace, SimConfig};
use congest_routing::skeleton::{build_spanner, SkeletonParams, SpannerOptions, DEFAULT_C};
use congest_routing::{NodeId, Weight, WeightedGraph, INF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_bandwidth(trace: &RoundTrace, cfg: &SimConfig) -> Result<(), String> {
    ensure(trace.max_bits_edge_round <= cfg.bandwidth, || {
        format!("{} bits on one edge in one round, B = {}", trace.max_bits_edge_round, cfg.bandwidth)
    })
}

/// All-pairs shortest paths over the skeleton graph given by hop-bounded
/// rows, by Floyd-Warshall.
fn floyd(skeleton: &[NodeId], rows: &[Vec<Weight>]) -> Vec<Vec<Weight>> {
    let m = skeleton.len();
    let mut d: Vec<Vec<Weight>> = (0..m).map(|x| skeleton.iter().map(|s| rows[x][s.index()]).collect()).collect();
    for z in 0..m {
        for x in 0..m {
            for y in 0..m {
                if d[x][z] < INF && d[z][y] < INF && d[x][z] + d[z][y] < d[x][y] {
                    d[x][y] = d[x][z] + d[z][y];
                }
            }
        }
    }
    d
}

fn bsp_equivalence() -> Outcome {
    let sizes = [16, 32, 64];
    let mut runs = 0;
    for idx in 0..50u64 {
        let n = sizes[idx as usize % 3];
        let g = if idx % 2 == 0 { random_graph(n, idx) } else { small_weight_graph(n, idx, 3) };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + idx);
        let tokens = (0..n).map(|_| (rng.gen_bool(0.3)).then(|| rng.gen_range(1..=4u64))).collect();
        let src = SourceAssignment::new(tokens);
        let cfg = SimConfig::for_graph(&g);
        let h = 8;
        for delta in [1, 2, 4] {
            let (lists, trace) = bsp(&g, h, delta, &src, &cfg).map_err(|e| e.to_string())?;
            ensure(trace.rounds <= (h * delta) as u64 + 2, || format!("{} rounds for h={h}, delta={delta}", trace.rounds))?;
            let reference = reference_bsp(&g, &src, h, delta);
            for v in g.nodes() {
                for t in 0..=h {
                    ensure(lists.at(v).level(t) == &reference[t][v.index()][..], || {
                        format!("graph {idx}: node {v}, t = {t}, delta = {delta}")
                    })?;
                }
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, all lists equal"))
}

fn route_stretch() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut builds = 0;
    let mut pairs = 0u64;
    for n in [32, 64, 128] {
        for alpha in ["0.6", "0.75", "1"] {
            for seed in 0..5 {
                let g = random_graph(n, 100 + seed);
                let oracle = DistanceMatrix::new(&g);
                let cfg = SimConfig::for_graph(&g);
                let opts = RoutingOptions { seed, retries: 5, ..Default::default() };
                let rt = build_tables(&g, parse_alpha(alpha).unwrap(), &cfg, &oracle, opts).map_err(|e| e.to_string())?;
                ensure(rt.trace.retries <= 5, || format!("{} retries", rt.trace.retries))?;
                let rho = rt.params.stretch();
                for v in g.nodes() {
                    for w in g.nodes() {
                        let exact = oracle.get(v, w);
                        let res = rt.route(&g, v, w).map_err(|e| e.to_string())?;
                        ensure(res.path.last() == Some(&w), || format!("{v} -> {w} ends elsewhere"))?;
                        ensure(res.weight <= rho * exact, || format!("n={n} alpha={alpha}: {v}->{w} weight {} wd {exact}", res.weight))?;
                        let est = rt.estimate(v, w).map_err(|e| e.to_string())?;
                        ensure(exact <= est && est <= rho * exact, || format!("{v}->{w} estimate {est} wd {exact}"))?;
                        if exact > 0 {
                            worst = worst.max(res.weight as f64 / exact as f64);
                        }
                        pairs += 1;
                    }
                }
                builds += 1;
            }
        }
    }
    Ok(format!("{builds} builds, {pairs} pairs, max stretch {worst:.2}"))
}

fn spanner() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for n in [32, 64, 128] {
        for k in [2, 3] {
            for seed in 0..3 {
                let g = random_graph(n, 200 + seed);
                let size = 2 * (n as f64).sqrt().ceil() as usize;
                let params = SkeletonParams::new(n, random_skeleton(n, size, seed), size, k, DEFAULT_C).unwrap();
                let opts = SpannerOptions { retries: 0, seed, validate: false };
                let sp = build_spanner(&g, &params, &SimConfig::for_graph(&g), opts).map_err(|e| e.to_string())?;
                let rows = hop_bounded_rows(&g, &params.skeleton, params.h);
                let base = floyd(&params.skeleton, &rows);
                let dist = sp.distances();
                for (x, &a) in params.skeleton.iter().enumerate() {
                    for (y, &b) in params.skeleton.iter().enumerate() {
                        let (d, wd) = (dist.get(a, b), base[x][y]);
                        ensure(d <= (2 * k as u64 - 1) * wd, || format!("n={n} k={k}: {a}-{b} at {d}, wd_S,h {wd}"))?;
                        if wd > 0 {
                            worst = worst.max(d as f64 / wd as f64);
                        }
                    }
                }
                let bound = 8.0 * k as f64 * (size as f64).powf(1.0 + 1.0 / k as f64) * log2n(n);
                ensure(sp.edges.len() as f64 <= bound, || format!("{} edges > {bound:.0}", sp.edges.len()))?;
                checked += 1;
            }
        }
    }
    let mut fidelity = 0;
    for (n, size, k, seed) in [(24, 10, 2, 0), (32, 16, 2, 1), (40, 20, 3, 2), (48, 24, 2, 3), (48, 30, 3, 4)] {
        let g = random_graph(n, seed);
        let params = SkeletonParams::new(n, random_skeleton(n, size, seed), size, k, DEFAULT_C).unwrap().with_h(n / 4);
        let opts = SpannerOptions { retries: 0, seed, validate: false };
        let sp = build_spanner(&g, &params, &SimConfig::for_graph(&g), opts).map_err(|e| e.to_string())?;
        let rows = hop_bounded_rows(&g, &params.skeleton, params.h);
        let marks: Vec<Vec<NodeId>> = sp.phases.iter().map(|p| p.marked.clone()).collect();
        let (expected, _) = reference_spanner(n, &params.skeleton, &rows, &marks, params.delta);
        let got: BTreeSet<_> = sp.edges.iter().map(|e| (e.s, e.t)).collect();
        ensure(got == expected, || format!("edge set differs from the centralized run, n={n}"))?;
        fidelity += 1;
    }
    Ok(format!("{checked} spanners, max stretch {worst:.2}, {fidelity} fidelity instances identical"))
}

fn distance_preservation() -> Outcome {
    let mut runs = 0;
    for n in [32, 64, 128] {
        for seed in 0..5 {
            let g = random_graph(n, 300 + seed);
            let mut sample = sample_nodes(n, (n as f64).powf(-0.5), seed);
            if sample.is_empty() {
                sample.push(NodeId(1));
            }
            let h = (4.0 * n as f64 * log2n(n) / sample.len() as f64).ceil() as usize;
            let oracle = DistanceMatrix::new(&g);
            let rows = hop_bounded_rows(&g, &sample, h);
            let d = floyd(&sample, &rows);
            for (x, &a) in sample.iter().enumerate() {
                for (y, &b) in sample.iter().enumerate() {
                    ensure(d[x][y] == oracle.get(a, b), || format!("n={n} seed={seed}: {a}-{b}"))?;
                }
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} skeletons preserve all distances"))
}

fn diameter() -> Outcome {
    let mut graphs: Vec<(String, WeightedGraph)> = Vec::new();
    for seed in 0..5 {
        graphs.push((format!("random seed {seed}"), random_graph(64, 400 + seed)));
    }
    for m in [3, 4, 5] {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let a: Vec<usize> = (1..=m).filter(|_| rng.gen_bool(0.5)).collect();
            let b: Vec<usize> = (1..=m).filter(|_| rng.gen_bool(0.5)).collect();
            graphs.push((format!("lb_diameter m={m} seed {seed}"), lb_diameter(m, 16, &a, &b).unwrap()));
        }
    }
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (name, g) in &graphs {
        let oracle = DistanceMatrix::new(g);
        let wd = metrics(g).wd;
        for k in [1, 2] {
            let opts = DiameterOptions { seed: runs, ..Default::default() };
            let d = approx_diameter(g, k, &SimConfig::for_graph(g), Some(&oracle), &opts).map_err(|e| e.to_string())?;
            let upper = (2 * k as u64 + 1) * wd;
            ensure(wd <= d.estimate && d.estimate <= upper, || format!("{name}, k={k}: {} outside [{wd}, {upper}]", d.estimate))?;
            worst = worst.max(d.estimate as f64 / wd as f64);
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, max ratio {worst:.2}"))
}

fn sketches() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for k in [1, 2] {
        for n in [64, 128] {
            for seed in 0..5 {
                let g = random_graph(n, 600 + seed);
                let oracle = DistanceMatrix::new(&g);
                let opts = SketchOptions { seed, ..Default::default() };
                let sk = build_sketches(&g, k, &SimConfig::for_graph(&g), &oracle, opts).map_err(|e| e.to_string())?;
                let bound = sk.stretch_bound();
                for v in g.nodes() {
                    for (i, level) in sk.sketch(v).levels.iter().enumerate().skip(1) {
                        ensure(level.len() <= sk.level_bounds[i], || {
                            format!("|H_{v}({i})| = {} > {}", level.len(), sk.level_bounds[i])
                        })?;
                    }
                    for w in g.nodes() {
                        let (exact, est) = (oracle.get(v, w), sk.estimate(v, w));
                        ensure(exact <= est && est <= bound * exact, || format!("k={k} n={n}: {v}-{w} {est} vs {exact}"))?;
                        if exact > 0 {
                            worst = worst.max(est as f64 / exact as f64);
                        }
                    }
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} builds, max stretch {worst:.2}"))
}

fn gsf() -> Outcome {
    let mut exact_runs = 0;
    let mut worst: f64 = 0.0;
    for idx in 0..60u64 {
        let n = 6 + (idx as usize % 7);
        let g = generate(&Family::RandomWeighted { n, p: Some(0.35), max_weight: Some(20) }, idx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(700 + idx);
        let count = 2 + (idx as usize % 5);
        let picked = rand::seq::index::sample(&mut rng, n, count.min(n));
        let terminals = picked.into_iter().map(|x| (NodeId::from_index(x), rng.gen_range(0..3))).collect();
        let inst = GsfInstance::new(n, terminals).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let sol = gsf_solve(&g, &inst, 1, &SimConfig::for_graph(&g), GsfOptions { seed: idx, ..Default::default() })
            .map_err(|e| e.to_string())?;
        ensure(sol.feasible, || format!("instance {idx} infeasible"))?;
        let report = gsf_verify(&g, &inst, &sol.edges, 1, 2, Some(&oracle)).map_err(|e| e.to_string())?;
        let opt = report.opt.unwrap();
        if g.m() <= 18 {
            ensure(brute_force_opt(&g, &inst) == opt, || format!("instance {idx}: exact optimum disagrees"))?;
        }
        ensure(report.ok, || format!("instance {idx}: weight {} > 4 * {opt}", sol.weight))?;
        let closure = TerminalMetric::new(&inst, |a, b| oracle.get(a, b));
        let topt = terminal_opt(&closure).map_err(|e| e.to_string())?;
        ensure(topt <= 2 * opt, || format!("instance {idx}: closure optimum {topt} > 2 * {opt}"))?;
        if opt > 0 {
            worst = worst.max(sol.weight as f64 / opt as f64);
        }
        exact_runs += 1;
    }
    let mut large = 0;
    for seed in 0..4u64 {
        let g = random_graph(96, 800 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terminals = rand::seq::index::sample(&mut rng, 96, 12)
            .into_iter()
            .map(|x| (NodeId::from_index(x), rng.gen_range(0..4)))
            .collect();
        let inst = GsfInstance::new(96, terminals).unwrap();
        for k in [1, 2] {
            let sol = gsf_solve(&g, &inst, k, &SimConfig::for_graph(&g), GsfOptions { seed, ..Default::default() })
                .map_err(|e| e.to_string())?;
            ensure(sol.feasible && gsf_opt(&inst, &DistanceMatrix::new(&g)).is_ok(), || format!("n=96 seed {seed} infeasible"))?;
            large += 1;
        }
    }
    Ok(format!("{exact_runs} exact instances (max ratio {worst:.2}), {large} larger runs, all feasible"))
}

fn tight_labels() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut builds = 0;
    for n in [32, 64] {
        // alpha = 1 gives k = 1, alpha = 3/4 gives k = 2 at these sizes
        for alpha in ["1", "0.75"] {
            for seed in 0..3 {
                let g = random_graph(n, 900 + seed);
                let oracle = DistanceMatrix::new(&g);
                let cfg = SimConfig::for_graph(&g);
                let opts = RoutingOptions { seed, ..Default::default() };
                let rt = build_tables(&g, parse_alpha(alpha).unwrap(), &cfg, &oracle, opts).map_err(|e| e.to_string())?;
                let tl = assign_tight_labels(&g, &rt, &cfg).map_err(|e| e.to_string())?;
                ensure(tl.is_permutation(), || format!("n={n} alpha={alpha}: labels are not 1..n"))?;
                let bound = rt.params.tight_stretch();
                for v in g.nodes() {
                    for w in g.nodes() {
                        let res = tight_route(&g, &rt, &tl, v, tl.label(w)).map_err(|e| e.to_string())?;
                        let exact = oracle.get(v, w);
                        ensure(res.path.last() == Some(&w), || format!("{v} -> {w} ends elsewhere"))?;
                        ensure(res.weight <= bound * exact, || format!("{v}->{w}: {} > {bound} * {exact}", res.weight))?;
                        if exact > 0 {
                            worst = worst.max(res.weight as f64 / exact as f64);
                        }
                    }
                }
                builds += 1;
            }
        }
    }
    Ok(format!("{builds} builds, max stretch {worst:.2}"))
}

fn round_accounting() -> Outcome {
    // broadcast and bsp bounds
    for seed in 0..6u64 {
        let n = [24, 48, 96][seed as usize % 3];
        let g = random_graph(n, 1000 + seed);
        let cfg = SimConfig::for_graph(&g);
        let hd = metrics(&g).hd as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let messages: Vec<Vec<Vec<u64>>> =
            (0..n).map(|_| (0..rng.gen_range(0..3)).map(|_| vec![rng.gen_range(0..n as u64)]).collect()).collect();
        let total: u64 = messages.iter().map(|m| m.len() as u64).sum();
        let (_, trace) = broadcast_all(&g, messages, &cfg).map_err(|e| e.to_string())?;
        ensure(trace.rounds <= total + 4 * hd + 8, || format!("broadcast of {total} took {} rounds, HD = {hd}", trace.rounds))?;
        check_bandwidth(&trace, &cfg)?;
        let src = SourceAssignment::singletons(n, sample_nodes(n, 0.2, seed));
        let (h, delta) = (12, 3);
        let (_, trace) = bsp(&g, h, delta, &src, &cfg).map_err(|e| e.to_string())?;
        ensure(trace.rounds <= (h * delta) as u64 + 2, || format!("bsp took {} rounds", trace.rounds))?;
        check_bandwidth(&trace, &cfg)?;
    }

    let mut report = Vec::new();
    for (alpha, a) in [("0.75", 0.75), ("1", 1.0)] {
        let mut rounds = Vec::new();
        let mut fitted = Vec::new();
        for n in [64usize, 128, 256] {
            let mut total = 0.0;
            let mut hd_sum = 0.0;
            for seed in 0..3 {
                let g = random_graph(n, 1100 + seed);
                let oracle = DistanceMatrix::new(&g);
                let cfg = SimConfig::for_graph(&g);
                let opts = RoutingOptions { seed, ..Default::default() };
                let rt = build_tables(&g, parse_alpha(alpha).unwrap(), &cfg, &oracle, opts).map_err(|e| e.to_string())?;
                check_bandwidth(&rt.trace, &cfg)?;
                total += rt.trace.rounds as f64;
                hd_sum += metrics(&g).hd as f64;
            }
            let mean = total / 3.0;
            let f = (n as f64).powf(a) * log2n(n).powi(2) + hd_sum / 3.0;
            rounds.push(mean);
            fitted.push(mean / f);
        }
        let c = fitted[0];
        ensure(fitted.iter().all(|&x| x <= 2.0 * c), || {
            format!("alpha={alpha}: rounds/f(n) = {fitted:?}, limit 2 * {c:.1}")
        })?;
        report.push(format!("alpha={alpha}: rounds {:.0}/{:.0}/{:.0}, ratio to C {:.2}", rounds[0], rounds[1], rounds[2], fitted[2] / c));
    }
    Ok(report.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("bsp oracle equivalence", bsp_equivalence),
        ("route stretch", route_stretch),
        ("spanner stretch, size and fidelity", spanner),
        ("skeleton distance preservation", distance_preservation),
        ("diameter approximation", diameter),
        ("distance sketches", sketches),
        ("generalized steiner forest", gsf),
        ("tight labels", tight_labels),
        ("round accounting", round_accounting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
